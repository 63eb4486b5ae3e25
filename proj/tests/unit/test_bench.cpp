#include <doctest.h>

#include <cstdio>
#include <fstream>

#include "trustgate/bench/bench.hpp"

using namespace trustgate;
using namespace trustgate::bench;

TEST_CASE("q1 campaign counts two tagged records per handshake per arm") {
    size_t n = 15;
    auto report = run_q1(n, 7);
    REQUIRE(report.doc.contains("arms"));
    for (const char* arm : {"baseline", "validated"}) {
        const auto& a = report.doc["arms"][arm];
        CHECK(a["tagged_records"].get<size_t>() == 2 * n);
        CHECK(a["handshake"]["count"].get<size_t>() == n);
    }
    for (const auto& t : report.doc["trials"]) {
        CHECK(t["outcome"].get<std::string>() == "Established");
    }
    CHECK(report.doc["deltas"]["handshake_ratio"].get<double>() > 0.0);
    CHECK(report.doc["environment"]["config_hash"].get<std::string>().size() == 64);
}

TEST_CASE("q1 csv agrees with the json trials record for record") {
    auto report = run_q1(5, 3);
    auto lines = report.csv_lines();
    REQUIRE(lines.size() == report.doc["trials"].size() + 1);
    CHECK(lines[0] == "campaign,arm,trial,outcome,handshake_ms");
    size_t i = 1;
    for (const auto& t : report.doc["trials"]) {
        CHECK(lines[i].find(t["arm"].get<std::string>()) != std::string::npos);
        CHECK(lines[i].find(t["outcome"].get<std::string>()) != std::string::npos);
        i++;
    }

    std::string jpath = "/tmp/trustgate_q1.json";
    std::string cpath = "/tmp/trustgate_q1.csv";
    REQUIRE(report.write_json(jpath));
    REQUIRE(report.write_csv(cpath));
    std::ifstream jin(jpath);
    nlohmann::json parsed = nlohmann::json::parse(jin);
    CHECK(parsed["campaign"] == "q1");
    std::remove(jpath.c_str());
    std::remove(cpath.c_str());
}

TEST_CASE("q2 medians rise with simulated distance and stay under the cap") {
    auto report = run_q2(60, {"short", "medium", "long"}, {1024, 16384}, "l1", 11);
    const auto& cells = report.doc["cells"];
    REQUIRE(cells.size() == 6);

    for (size_t size : {1024u, 16384u}) {
        double prev = 0;
        for (const auto& preset : {"short", "medium", "long"}) {
            for (const auto& cell : cells) {
                if (cell["preset"] == preset && cell["payload_bytes"] == size) {
                    double median = cell["median_ms"].get<double>();
                    CHECK(median >= prev);
                    CHECK(cell["max_ms"].get<double>() < 20000.0);
                    prev = median;
                }
            }
        }
    }
}

TEST_CASE("contract layer is faster than the base layer and size-insensitive") {
    auto l1 = run_q2(60, {"short", "long"}, {1024, 16384}, "l1", 21);
    auto l2 = run_q2(60, {"short", "long"}, {1024, 16384}, "l2", 21);

    auto median_of = [](const nlohmann::json& doc, const std::string& preset, size_t size) {
        for (const auto& cell : doc["cells"]) {
            if (cell["preset"] == preset && cell["payload_bytes"] == size) {
                return cell["median_ms"].get<double>();
            }
        }
        return -1.0;
    };

    for (const auto& preset : {"short", "long"}) {
        for (size_t size : {1024u, 16384u}) {
            CHECK(median_of(l2.doc, preset, size) < median_of(l1.doc, preset, size));
        }
        double small = median_of(l2.doc, preset, 1024);
        double large = median_of(l2.doc, preset, 16384);
        CHECK(std::abs(large - small) <= 0.10 * std::max(small, large));
    }
}

TEST_CASE("q2 csv shape matches its trials") {
    auto report = run_q2(10, {"short"}, {1024}, "l2", 5);
    auto lines = report.csv_lines();
    REQUIRE(lines.size() == report.doc["trials"].size() + 1);
    CHECK(lines[0] == "campaign,preset,payload_bytes,trial,delay_ms");
}
