#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "trustgate/controller/controller.hpp"
#include "trustgate/crypto.hpp"
#include "trustgate/dataplane/extract.hpp"
#include "trustgate/dataplane/pipeline.hpp"
#include "trustgate/dataplane/table.hpp"
#include "trustgate/ledger/registry.hpp"
#include "trustgate/ledger/tangle.hpp"
#include "trustgate/opcua/codec.hpp"

namespace py = pybind11;
using namespace trustgate;

namespace {

Bytes to_bytes(const py::bytes& b) {
    std::string s = b;
    return Bytes(s.begin(), s.end());
}

py::bytes from_bytes(BytesView v) {
    return py::bytes(reinterpret_cast<const char*>(v.data()), v.size());
}

dataplane::Thumbprint to_thumbprint(const py::bytes& b) {
    Bytes raw = to_bytes(b);
    if (raw.size() != 20) throw py::value_error("thumbprint must be exactly 20 bytes");
    dataplane::Thumbprint tp{};
    std::copy(raw.begin(), raw.end(), tp.begin());
    return tp;
}

crypto::SigningKey key_from_seed(const py::bytes& seed) {
    auto key = crypto::SigningKey::from_seed(to_bytes(seed));
    if (!key) throw py::value_error("signing key seed must be 32 bytes");
    return *key;
}

const char* msg_type_name(opcua::MessageType t) {
    switch (t) {
        case opcua::MessageType::Hel: return "HEL";
        case opcua::MessageType::Ack: return "ACK";
        case opcua::MessageType::Opn: return "OPN";
        case opcua::MessageType::Msg: return "MSG";
        case opcua::MessageType::Clo: return "CLO";
        case opcua::MessageType::Err: return "ERR";
    }
    return "?";
}

py::object optional_bytes(const opcua::ByteStringField& f) {
    if (!f) return py::none();
    return from_bytes(*f);
}

/// Registry plus the manual clock it reads; keeps the contract-layer
/// semantics scriptable from tests.
class PyRegistry {
public:
    PyRegistry(const std::vector<py::bytes>& admin_seeds, int64_t start_clock)
        : clock_(start_clock) {
        ledger::AdminKeyring keyring;
        for (const auto& seed : admin_seeds) {
            keyring.authorized.insert(key_from_seed(seed).public_key());
        }
        registry_ = std::make_unique<ledger::Registry>(
            keyring, [this] { return clock_; });
    }

    std::string add(const py::bytes& der, int64_t expire, const py::bytes& key_seed) {
        return ledger::registry_status_name(
            registry_->add_certificate(to_bytes(der), expire, key_from_seed(key_seed)));
    }

    std::string revoke(const py::bytes& der, const py::bytes& key_seed) {
        return ledger::registry_status_name(
            registry_->revoke_certificate(to_bytes(der), key_from_seed(key_seed)));
    }

    py::list get_all() const {
        py::list out;
        for (const auto& rec : registry_->get_all_certificates()) {
            py::dict d;
            d["thumbprint"] = from_bytes(BytesView(rec.thumbprint.data(), rec.thumbprint.size()));
            d["der"] = from_bytes(rec.der);
            d["expire"] = rec.expire_date_unix;
            out.append(d);
        }
        return out;
    }

    void advance_clock(int64_t delta) { clock_ += delta; }
    int64_t clock() const { return clock_; }

private:
    int64_t clock_;
    std::unique_ptr<ledger::Registry> registry_;
};

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "In-path trust enforcement for OPC UA: codec, extraction pipeline, "
              "thumbprint table and ledger primitives";

    m.def("swap_length_bytes", &dataplane::swap_length_bytes,
          "Reorder a length field extracted big-endian back to its declared value");

    m.def("decode_message_header", [](const py::bytes& data) {
        Bytes raw = to_bytes(data);
        opcua::MessageHeader hdr;
        auto err = opcua::decode_message_header(raw, hdr);
        if (err != opcua::DecodeError::Ok) throw py::value_error(opcua::decode_error_name(err));
        py::dict d;
        d["msg_type"] = msg_type_name(hdr.msg_type);
        d["chunk_type"] = std::string(1, static_cast<char>(hdr.chunk_type));
        d["message_size"] = hdr.message_size;
        return d;
    });

    m.def(
        "encode_opn",
        [](uint32_t secure_channel_id, const py::object& policy_uri,
           const py::object& sender_certificate, const py::object& receiver_thumbprint,
           uint32_t sequence_number, uint32_t request_id, const py::bytes& body) {
            opcua::OpnMessage msg;
            msg.secure_channel_id = secure_channel_id;
            if (!policy_uri.is_none()) {
                msg.security_header.security_policy_uri = to_bytes(py::bytes(policy_uri));
            }
            if (!sender_certificate.is_none()) {
                msg.security_header.sender_certificate = to_bytes(py::bytes(sender_certificate));
            }
            if (!receiver_thumbprint.is_none()) {
                msg.security_header.receiver_certificate_thumbprint =
                    to_bytes(py::bytes(receiver_thumbprint));
            }
            msg.sequence_number = sequence_number;
            msg.request_id = request_id;
            msg.body = to_bytes(body);
            Bytes wire;
            auto err = opcua::encode_opn(msg, wire);
            if (err != opcua::DecodeError::Ok) {
                throw py::value_error(opcua::decode_error_name(err));
            }
            return from_bytes(wire);
        },
        py::arg("secure_channel_id") = 0, py::arg("policy_uri") = py::none(),
        py::arg("sender_certificate") = py::none(), py::arg("receiver_thumbprint") = py::none(),
        py::arg("sequence_number") = 1, py::arg("request_id") = 1,
        py::arg("body") = py::bytes());

    m.def("decode_opn", [](const py::bytes& data) {
        Bytes raw = to_bytes(data);
        opcua::OpnMessage msg;
        auto err = opcua::decode_opn(raw, msg);
        if (err != opcua::DecodeError::Ok) throw py::value_error(opcua::decode_error_name(err));
        py::dict d;
        d["secure_channel_id"] = msg.secure_channel_id;
        d["policy_uri"] = optional_bytes(msg.security_header.security_policy_uri);
        d["sender_certificate"] = optional_bytes(msg.security_header.sender_certificate);
        d["receiver_thumbprint"] =
            optional_bytes(msg.security_header.receiver_certificate_thumbprint);
        d["sequence_number"] = msg.sequence_number;
        d["request_id"] = msg.request_id;
        d["body"] = from_bytes(msg.body);
        return d;
    });

    m.def(
        "extract_certificate",
        [](const py::bytes& chunk, size_t max_chunks) {
            Bytes raw = to_bytes(chunk);
            auto result = dataplane::extract_certificate(raw, max_chunks);
            py::dict d;
            d["status"] = dataplane::extract_status_name(result.status);
            py::list chunks;
            for (const auto& c : result.cert.chunks) chunks.append(from_bytes(c));
            d["chunks"] = chunks;
            d["declared_length"] = result.cert.declared_length;
            d["receiver_thumbprint"] =
                result.receiver_thumbprint
                    ? py::object(from_bytes(BytesView(result.receiver_thumbprint->data(), 20)))
                    : py::object(py::none());
            return d;
        },
        py::arg("chunk"), py::arg("max_chunks") = dataplane::CertChunks::kDefaultMaxChunks);

    m.def("hash_thumbprint", [](const py::bytes& der) {
        auto digest = controller::hash_thumbprint(to_bytes(der));
        if (!digest) throw py::value_error("empty certificate");
        return from_bytes(BytesView(digest->data(), digest->size()));
    });

    m.def(
        "process_opn",
        [](const py::bytes& chunk, const dataplane::ThumbprintTable& table,
           bool validation_enabled, size_t max_chunks) {
            dataplane::PipelineConfig cfg;
            cfg.validation_enabled = validation_enabled;
            cfg.max_chunks = max_chunks;
            auto v = dataplane::process_chunk(to_bytes(chunk), opcua::MessageType::Opn, table,
                                              cfg);
            py::dict d;
            d["decision"] = v.decision == dataplane::Decision::Allow ? "allow" : "drop";
            d["reason"] = dataplane::drop_reason_name(v.reason);
            d["sender_thumbprint"] =
                v.sender_thumbprint
                    ? py::object(from_bytes(BytesView(v.sender_thumbprint->data(), 20)))
                    : py::object(py::none());
            return d;
        },
        py::arg("chunk"), py::arg("table"), py::arg("validation_enabled") = true,
        py::arg("max_chunks") = dataplane::CertChunks::kDefaultMaxChunks);

    py::class_<dataplane::ThumbprintTable>(m, "ThumbprintTable")
        .def(py::init<size_t>(), py::arg("capacity") = dataplane::ThumbprintTable::kDefaultCapacity)
        .def("lookup",
             [](const dataplane::ThumbprintTable& t, const py::bytes& tp) {
                 return t.lookup(to_thumbprint(tp));
             })
        .def("install",
             [](dataplane::ThumbprintTable& t, const py::bytes& tp) {
                 return t.install(to_thumbprint(tp)) == dataplane::TableStatus::Ok;
             },
             "Returns False when the table is full")
        .def("remove",
             [](dataplane::ThumbprintTable& t, const py::bytes& tp) {
                 t.remove(to_thumbprint(tp));
             })
        .def("size", &dataplane::ThumbprintTable::size)
        .def("capacity", &dataplane::ThumbprintTable::capacity)
        .def("generation", &dataplane::ThumbprintTable::generation)
        .def("clear", &dataplane::ThumbprintTable::clear);

    m.def(
        "make_self_signed",
        [](const std::string& common_name, int64_t not_after_unix, size_t min_der_size) {
            auto id = crypto::make_self_signed(common_name, not_after_unix, min_der_size);
            if (!id) throw py::value_error("certificate generation failed");
            py::dict d;
            d["der"] = from_bytes(id->der);
            d["thumbprint"] = from_bytes(BytesView(id->thumbprint.data(), id->thumbprint.size()));
            d["key_seed"] = from_bytes(id->key.seed());
            return d;
        },
        py::arg("common_name"), py::arg("not_after_unix") = 0, py::arg("min_der_size") = 0);

    m.def("generate_signing_key",
          [] { return from_bytes(crypto::SigningKey::generate().seed()); });

    py::class_<ledger::Tangle>(m, "Tangle")
        .def(py::init([](size_t confirmation_k, uint64_t seed) {
                 ledger::TangleConfig cfg;
                 cfg.confirmation_k = confirmation_k;
                 cfg.seed = seed;
                 return std::make_unique<ledger::Tangle>(cfg);
             }),
             py::arg("confirmation_k") = 2, py::arg("seed") = 42)
        .def("submit_issue",
             [](ledger::Tangle& t, const py::bytes& der, int64_t expire,
                const py::bytes& key_seed) {
                 auto id = t.submit({ledger::ActionKind::Issue, to_bytes(der), expire},
                                    key_from_seed(key_seed));
                 return to_hex(BytesView(id.data(), id.size()));
             })
        .def("submit_revoke",
             [](ledger::Tangle& t, const py::bytes& der, const py::bytes& key_seed) {
                 auto id = t.submit({ledger::ActionKind::Revoke, to_bytes(der), 0},
                                    key_from_seed(key_seed));
                 return to_hex(BytesView(id.data(), id.size()));
             })
        .def("confirm_step", [](ledger::Tangle& t) { return t.confirm_step().size(); })
        .def("size", &ledger::Tangle::size)
        .def("tip_count", &ledger::Tangle::tip_count)
        .def("is_acyclic", &ledger::Tangle::is_acyclic)
        .def("export_log", &ledger::Tangle::export_log)
        .def("import_log", &ledger::Tangle::import_log);

    py::class_<PyRegistry>(m, "Registry")
        .def(py::init<const std::vector<py::bytes>&, int64_t>(), py::arg("admin_seeds"),
             py::arg("start_clock") = 1000000)
        .def("add", &PyRegistry::add, py::arg("der"), py::arg("expire"), py::arg("key_seed"))
        .def("revoke", &PyRegistry::revoke, py::arg("der"), py::arg("key_seed"))
        .def("get_all", &PyRegistry::get_all)
        .def("advance_clock", &PyRegistry::advance_clock)
        .def("clock", &PyRegistry::clock);

    m.attr("POLICY_NONE") = opcua::kPolicyNone;
    m.attr("POLICY_BASIC256SHA256") = opcua::kPolicyBasic256Sha256;
    m.attr("POLICY_AES128_SHA256_RSAOAEP") = opcua::kPolicyAes128Sha256RsaOaep;
    m.attr("POLICY_AES256_SHA256_RSAPSS") = opcua::kPolicyAes256Sha256RsaPss;
}
