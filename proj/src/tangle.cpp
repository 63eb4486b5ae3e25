#include "trustgate/ledger/tangle.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace trustgate::ledger {

const char* insert_status_name(InsertStatus s) {
    switch (s) {
        case InsertStatus::Ok: return "Ok";
        case InsertStatus::EmptyPayload: return "EmptyPayload";
        case InsertStatus::UnknownApproval: return "UnknownApproval";
        case InsertStatus::BadSignature: return "BadSignature";
        case InsertStatus::DuplicateId: return "DuplicateId";
    }
    return "?";
}

Bytes transaction_signing_bytes(const std::string& tag, const Bytes& payload,
                                const std::array<TxId, 2>& approvals, int64_t timestamp_ms) {
    ByteWriter w;
    w.write_u32_le(static_cast<uint32_t>(tag.size()));
    w.write_str(tag);
    w.write_u32_le(static_cast<uint32_t>(payload.size()));
    w.write_bytes(payload);
    for (const auto& a : approvals) w.write_bytes(BytesView(a.data(), a.size()));
    uint64_t ts = static_cast<uint64_t>(timestamp_ms);
    w.write_u32_le(static_cast<uint32_t>(ts & 0xFFFFFFFFu));
    w.write_u32_le(static_cast<uint32_t>(ts >> 32));
    return w.take();
}

TxId transaction_id(const LedgerTransaction& tx) {
    Bytes content = transaction_signing_bytes(tx.tag, tx.payload, tx.approvals, tx.timestamp_ms);
    content.insert(content.end(), tx.sender_public_key.begin(), tx.sender_public_key.end());
    content.insert(content.end(), tx.signature.begin(), tx.signature.end());
    return crypto::sha256(content);
}

std::optional<TangleDelivery> TangleSubscription::poll() {
    std::lock_guard lock(mu_);
    if (q_.empty()) return std::nullopt;
    TangleDelivery d = std::move(q_.front());
    q_.pop_front();
    return d;
}

std::vector<TangleDelivery> TangleSubscription::drain() {
    std::lock_guard lock(mu_);
    std::vector<TangleDelivery> out(q_.begin(), q_.end());
    q_.clear();
    return out;
}

Tangle::Tangle(TangleConfig cfg)
    : rng_(cfg.seed), k_(cfg.confirmation_k), delay_(std::move(cfg.delay)) {
    LedgerTransaction genesis;
    genesis.tag = "genesis";
    genesis.timestamp_ms = 0;
    genesis.id = transaction_id(genesis);
    genesis_id_ = genesis.id;
    transactions_[genesis.id] = genesis;
    order_.push_back(genesis.id);
    tips_.insert(genesis.id);
}

TxId Tangle::submit(const CertificateAction& action, const crypto::SigningKey& key,
                    const std::string& tag) {
    return submit_raw(tag, encode_action(action), key);
}

TxId Tangle::submit_raw(const std::string& tag, Bytes payload, const crypto::SigningKey& key) {
    std::lock_guard lock(mu_);
    vclock_ms_ += 1;

    LedgerTransaction tx;
    tx.tag = tag;
    tx.payload = std::move(payload);
    tx.sender_public_key = key.public_key();
    tx.timestamp_ms = vclock_ms_;

    // Two uniformly random tips; a lone tip is approved twice.
    std::vector<TxId> tip_list(tips_.begin(), tips_.end());
    std::uniform_int_distribution<size_t> pick(0, tip_list.size() - 1);
    tx.approvals[0] = tip_list[pick(rng_)];
    tx.approvals[1] = tip_list[pick(rng_)];

    Bytes signing = transaction_signing_bytes(tx.tag, tx.payload, tx.approvals, tx.timestamp_ms);
    tx.signature = key.sign(signing);
    tx.id = transaction_id(tx);

    insert_unlocked(tx);
    deliver_unlocked(tx);
    return tx.id;
}

InsertStatus Tangle::insert_transaction(const LedgerTransaction& tx) {
    std::lock_guard lock(mu_);
    if (tx.payload.empty() && tx.tag != "genesis") return InsertStatus::EmptyPayload;
    if (transactions_.count(tx.id) > 0) return InsertStatus::DuplicateId;
    for (const auto& a : tx.approvals) {
        if (transactions_.count(a) == 0) return InsertStatus::UnknownApproval;
    }
    Bytes signing = transaction_signing_bytes(tx.tag, tx.payload, tx.approvals, tx.timestamp_ms);
    if (!crypto::verify(tx.sender_public_key, signing, tx.signature)) {
        return InsertStatus::BadSignature;
    }
    LedgerTransaction stored = tx;
    stored.id = transaction_id(tx);
    if (transactions_.count(stored.id) > 0) return InsertStatus::DuplicateId;
    vclock_ms_ += 1;
    insert_unlocked(stored);
    deliver_unlocked(stored);
    return InsertStatus::Ok;
}

void Tangle::insert_unlocked(const LedgerTransaction& tx) {
    transactions_[tx.id] = tx;
    order_.push_back(tx.id);
    for (const auto& a : tx.approvals) {
        approvers_[a].push_back(tx.id);
        tips_.erase(a);
    }
    tips_.insert(tx.id);
}

void Tangle::deliver_unlocked(const LedgerTransaction& tx) {
    int64_t submit_vt = vclock_ms_;
    int64_t delay = delay_ ? delay_(tx.payload.size()) : 0;
    TangleDelivery d;
    d.tx = tx;
    d.confirmed = confirmed_.count(tx.id) > 0;
    d.submit_vtime_ms = submit_vt;
    d.deliver_vtime_ms = submit_vt + delay;
    for (auto& sub : subs_) {
        if (!sub->tag_filter_.empty() && sub->tag_filter_ != tx.tag) continue;
        std::lock_guard qlock(sub->mu_);
        sub->q_.push_back(d);
    }
}

std::pair<TxId, TxId> Tangle::select_tips() {
    std::lock_guard lock(mu_);
    std::vector<TxId> tip_list(tips_.begin(), tips_.end());
    std::uniform_int_distribution<size_t> pick(0, tip_list.size() - 1);
    return {tip_list[pick(rng_)], tip_list[pick(rng_)]};
}

size_t Tangle::approver_count_unlocked(const TxId& id) const {
    // Distinct transitive approvers via reverse-edge BFS.
    std::set<TxId> seen;
    std::vector<TxId> stack{id};
    while (!stack.empty()) {
        TxId cur = stack.back();
        stack.pop_back();
        auto it = approvers_.find(cur);
        if (it == approvers_.end()) continue;
        for (const auto& ap : it->second) {
            if (seen.insert(ap).second) stack.push_back(ap);
        }
    }
    return seen.size();
}

std::vector<TxId> Tangle::confirm_step() {
    std::lock_guard lock(mu_);
    std::vector<TxId> fresh;
    for (const auto& id : order_) {
        if (confirmed_.count(id) > 0) continue;
        if (approver_count_unlocked(id) >= k_) {
            confirmed_.insert(id);
            fresh.push_back(id);
        }
    }
    return fresh;
}

bool Tangle::is_confirmed(const TxId& id) const {
    std::lock_guard lock(mu_);
    return confirmed_.count(id) > 0;
}

bool Tangle::verify_sender(const LedgerTransaction& tx, const AdminKeyring& keyring) {
    if (!keyring.contains(tx.sender_public_key)) return false;
    Bytes signing = transaction_signing_bytes(tx.tag, tx.payload, tx.approvals, tx.timestamp_ms);
    return crypto::verify(tx.sender_public_key, signing, tx.signature);
}

std::shared_ptr<TangleSubscription> Tangle::subscribe(const std::string& tag) {
    std::lock_guard lock(mu_);
    auto sub = std::make_shared<TangleSubscription>();
    sub->tag_filter_ = tag;
    subs_.push_back(sub);
    return sub;
}

size_t Tangle::size() const {
    std::lock_guard lock(mu_);
    return transactions_.size();
}

size_t Tangle::tip_count() const {
    std::lock_guard lock(mu_);
    return tips_.size();
}

TxId Tangle::genesis_id() const {
    std::lock_guard lock(mu_);
    return genesis_id_;
}

std::optional<LedgerTransaction> Tangle::get(const TxId& id) const {
    std::lock_guard lock(mu_);
    auto it = transactions_.find(id);
    if (it == transactions_.end()) return std::nullopt;
    return it->second;
}

std::vector<TxId> Tangle::all_ids() const {
    std::lock_guard lock(mu_);
    return order_;
}

bool Tangle::is_acyclic() const {
    std::lock_guard lock(mu_);
    // Approvals must reference transactions inserted strictly earlier.
    std::set<TxId> seen;
    for (const auto& id : order_) {
        const auto& tx = transactions_.at(id);
        if (id != genesis_id_) {
            for (const auto& a : tx.approvals) {
                if (seen.count(a) == 0) return false;
            }
        }
        seen.insert(id);
    }
    return true;
}

size_t Tangle::transitive_approver_count(const TxId& id) const {
    std::lock_guard lock(mu_);
    return approver_count_unlocked(id);
}

int64_t Tangle::now_vtime_ms() const {
    std::lock_guard lock(mu_);
    return vclock_ms_;
}

bool Tangle::export_log(const std::string& path) const {
    std::lock_guard lock(mu_);
    std::ofstream out(path);
    if (!out) return false;
    // Space-delimited base64 fields; empty values are written as "-".
    auto field = [](std::string b64) { return b64.empty() ? std::string("-") : b64; };
    for (const auto& id : order_) {
        const auto& tx = transactions_.at(id);
        out << to_base64(BytesView(tx.id.data(), tx.id.size())) << ' '
            << field(to_base64(
                   BytesView(reinterpret_cast<const uint8_t*>(tx.tag.data()), tx.tag.size())))
            << ' ' << field(to_base64(tx.payload)) << ' '
            << to_base64(BytesView(tx.sender_public_key.data(), tx.sender_public_key.size()))
            << ' ' << to_base64(BytesView(tx.signature.data(), tx.signature.size())) << ' '
            << to_base64(BytesView(tx.approvals[0].data(), tx.approvals[0].size())) << ' '
            << to_base64(BytesView(tx.approvals[1].data(), tx.approvals[1].size())) << ' '
            << tx.timestamp_ms << '\n';
    }
    return true;
}

bool Tangle::import_log(const std::string& path) {
    std::ifstream in(path);
    if (!in) return false;
    std::lock_guard lock(mu_);
    transactions_.clear();
    order_.clear();
    tips_.clear();
    confirmed_.clear();
    approvers_.clear();
    vclock_ms_ = 0;

    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::string f[7];
        int64_t ts = 0;
        for (auto& field : f) {
            if (!(ss >> field)) return false;
        }
        if (!(ss >> ts)) return false;

        auto unfield = [](const std::string& s) { return s == "-" ? std::string() : s; };
        auto id_b = from_base64(f[0]);
        auto tag_b = from_base64(unfield(f[1]));
        auto payload_b = from_base64(unfield(f[2]));
        auto pub_b = from_base64(f[3]);
        auto sig_b = from_base64(f[4]);
        auto ap0_b = from_base64(f[5]);
        auto ap1_b = from_base64(f[6]);
        if (!id_b || id_b->size() != 32 || !tag_b || !payload_b || !pub_b ||
            pub_b->size() != 32 || !sig_b || sig_b->size() != 64 || !ap0_b ||
            ap0_b->size() != 32 || !ap1_b || ap1_b->size() != 32) {
            return false;
        }
        LedgerTransaction tx;
        std::copy(id_b->begin(), id_b->end(), tx.id.begin());
        tx.tag.assign(tag_b->begin(), tag_b->end());
        tx.payload = std::move(*payload_b);
        std::copy(pub_b->begin(), pub_b->end(), tx.sender_public_key.begin());
        std::copy(sig_b->begin(), sig_b->end(), tx.signature.begin());
        std::copy(ap0_b->begin(), ap0_b->end(), tx.approvals[0].begin());
        std::copy(ap1_b->begin(), ap1_b->end(), tx.approvals[1].begin());
        tx.timestamp_ms = ts;

        if (tx.tag == "genesis" && order_.empty()) genesis_id_ = tx.id;
        insert_unlocked(tx);
        vclock_ms_ = std::max(vclock_ms_, tx.timestamp_ms);
    }
    return !order_.empty();
}

}  // namespace trustgate::ledger
