#include "trustgate/controller/controller.hpp"

#include <spdlog/spdlog.h>

#include <cinttypes>
#include <fstream>
#include <sstream>

namespace trustgate::controller {

std::optional<crypto::Sha1Digest> hash_thumbprint(BytesView der) {
    if (der.empty()) return std::nullopt;
    return crypto::sha1(der);
}

Controller::Controller(std::shared_ptr<dataplane::ThumbprintTable> table,
                       ledger::AdminKeyring keyring, ControllerOptions opts)
    : table_(std::move(table)), keyring_(std::move(keyring)), opts_(std::move(opts)) {}

void Controller::on_event(const ledger::CertificateEvent& event) {
    // The ledger layer already filters senders; re-check before mutating.
    if (!keyring_.contains(event.sender)) {
        spdlog::warn("controller: event {} from unknown sender ignored", event.seq);
        return;
    }
    last_event_id_ = event.seq;

    if (event.kind == ledger::ActionKind::Issue) {
        auto status = table_->install(event.thumbprint);
        if (status == dataplane::TableStatus::Full) {
            spdlog::warn("controller: table full, install of {} queued for retry (event {})",
                         to_hex(BytesView(event.thumbprint.data(), event.thumbprint.size())),
                         event.seq);
            pending_retries_.push_back(event);
            return;
        }
        known_[event.thumbprint] = KnownRecord{event.der, event.expire};
    } else {
        table_->remove(event.thumbprint);
        known_.erase(event.thumbprint);
    }
    if (!opts_.snapshot_path.empty()) save_snapshot();
}

SyncReport Controller::sync_full(ledger::Registry& registry) {
    SyncReport report;
    auto records = registry.get_all_certificates();

    std::map<crypto::Sha1Digest, ledger::RegistryRecord> target;
    for (auto& rec : records) target[rec.thumbprint] = rec;

    for (const auto& tp : table_->snapshot()) {
        if (target.count(tp) == 0) {
            table_->remove(tp);
            known_.erase(tp);
            report.removals++;
        }
    }
    for (const auto& [tp, rec] : target) {
        if (!table_->lookup(tp)) {
            if (table_->install(tp) == dataplane::TableStatus::Ok) {
                report.installs++;
            } else {
                spdlog::warn("controller: table full during full sync");
                continue;
            }
        }
        known_[tp] = KnownRecord{rec.der, rec.expire_date_unix};
    }
    if (!opts_.snapshot_path.empty()) save_snapshot();
    return report;
}

size_t Controller::expire_sweep(int64_t clock_unix) {
    size_t removed = 0;
    for (auto it = known_.begin(); it != known_.end();) {
        if (it->second.expire && *it->second.expire < clock_unix) {
            table_->remove(it->first);
            it = known_.erase(it);
            removed++;
        } else {
            ++it;
        }
    }
    if (removed > 0 && !opts_.snapshot_path.empty()) save_snapshot();
    return removed;
}

size_t Controller::drain_retries() {
    size_t applied = 0;
    size_t n = pending_retries_.size();
    for (size_t i = 0; i < n; i++) {
        ledger::CertificateEvent ev = std::move(pending_retries_.front());
        pending_retries_.pop_front();
        if (table_->install(ev.thumbprint) == dataplane::TableStatus::Ok) {
            known_[ev.thumbprint] = KnownRecord{ev.der, ev.expire};
            applied++;
        } else {
            pending_retries_.push_back(std::move(ev));
        }
    }
    return applied;
}

bool Controller::save_snapshot() const {
    if (opts_.snapshot_path.empty()) return false;
    std::ofstream out(opts_.snapshot_path, std::ios::trunc);
    if (!out) return false;
    out << "trustgate-snapshot v1\n";
    out << "last_event_id " << last_event_id_ << "\n";
    for (const auto& [tp, rec] : known_) {
        out << to_hex(BytesView(tp.data(), tp.size())) << ' '
            << (rec.expire ? std::to_string(*rec.expire) : "-") << '\n';
    }
    return true;
}

bool Controller::load_snapshot() {
    if (opts_.snapshot_path.empty()) return false;
    std::ifstream in(opts_.snapshot_path);
    if (!in) return false;  // no snapshot: start fail-closed with empty table
    std::string header;
    if (!std::getline(in, header) || header != "trustgate-snapshot v1") return false;

    std::string line;
    if (!std::getline(in, line)) return false;
    {
        std::istringstream ss(line);
        std::string label;
        ss >> label >> last_event_id_;
        if (label != "last_event_id") return false;
    }
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::string hex, expire_str;
        ss >> hex >> expire_str;
        auto raw = from_hex(hex);
        if (!raw || raw->size() != 20) return false;
        crypto::Sha1Digest tp{};
        std::copy(raw->begin(), raw->end(), tp.begin());
        KnownRecord rec;
        if (expire_str != "-") rec.expire = std::stoll(expire_str);
        known_[tp] = rec;
        table_->install(tp);
    }
    return true;
}

}  // namespace trustgate::controller
