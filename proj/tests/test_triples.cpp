#include "kstgcn/triples.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>

using namespace kstgcn;

namespace {

std::string temp_dir(const std::string& tag) {
    auto dir = std::filesystem::temp_directory_path() / ("kstgcn_triples_" + tag);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir.string();
}

TripleStore path_graph_store(int n) {
    TripleStore s;
    for (int i = 0; i < n; ++i) s.add_entity("e" + std::to_string(i), EntityKind::section);
    int adj = s.add_relation("adj");
    for (int i = 0; i + 1 < n; ++i) s.add_relation_triple(i, adj, i + 1);
    return s;
}

}  // namespace

TEST_CASE("poi bucket boundaries") {
    CHECK(poi_bucket(0) == 0);
    CHECK(poi_bucket(-3) == 0);
    CHECK(poi_bucket(1) == 1);
    CHECK(poi_bucket(5) == 1);
    CHECK(poi_bucket(6) == 2);
    CHECK(poi_bucket(15) == 2);
    CHECK(poi_bucket(16) == 3);
    CHECK(poi_bucket(50) == 3);
    CHECK(poi_bucket(51) == 4);
}

TEST_CASE("build_ckg minimal: one edge, no attributes") {
    RoadGraph g = build_graph(2, {{0, 1}});
    TripleStore s = build_ckg(g, {}, {}, {});
    REQUIRE(s.relations().size() == 1);
    CHECK(s.relations()[0].head == s.entity_id(g.node_ids[0]));
    CHECK(s.relations()[0].tail == s.entity_id(g.node_ids[1]));
    CHECK(s.relation_name(s.relations()[0].relation) == "adj");
    CHECK(s.attributes().empty());
}

TEST_CASE("build_ckg stores one canonical triple per undirected edge") {
    RoadGraph g = build_graph(4, {{0, 1}, {2, 1}, {3, 2}});
    TripleStore s = build_ckg(g, {}, {}, {});
    REQUIRE(s.relations().size() == 3);
    int adj = s.relation_id("adj");
    for (const auto& t : s.relations()) {
        CHECK(t.head < t.tail);
        CHECK(t.relation == adj);
        CHECK_FALSE(s.has_relation(t.tail, adj, t.head));
    }
    CHECK(s.has_relation(s.entity_id(g.node_ids[1]), adj, s.entity_id(g.node_ids[2])));
}

TEST_CASE("build_ckg bucketed poi attribute triples") {
    // counts restaurant=15, school=6 on the first section
    RoadGraph g = build_graph(2, {{0, 1}});
    CkgConfig cfg;
    cfg.poi_categories = {"restaurant", "school"};
    TripleStore s = build_ckg(g, {{15, 6}, {0, 0}}, {}, {}, cfg);
    int e0 = s.entity_id(g.node_ids[0]);
    int restaurant = s.attribute_id("restaurant");
    int school = s.attribute_id("school");
    std::map<int, std::string> seen;
    for (int idx : s.attribute_triples_of(e0)) {
        const auto& t = s.attributes()[idx];
        seen[t.attribute] = s.value_name(t.attribute, t.value);
    }
    REQUIRE(seen.size() == 2);
    CHECK(seen[restaurant] == "6-15");
    CHECK(seen[school] == "6-15");
}

TEST_CASE("build_ckg cooccurrence half") {
    // two sections share c1, only one has c2
    RoadGraph g = build_graph(2, {{0, 1}});
    CkgConfig cfg;
    cfg.poi_categories = {"c1", "c2"};
    TripleStore s = build_ckg(g, {{3, 2}, {1, 0}}, {}, {}, cfg);
    CHECK(s.cooccurrence().size() == 1);
    CHECK(s.cooccurrence_probability(s.attribute_id("c1"), s.attribute_id("c2")) ==
          Catch::Approx(0.5));
}

TEST_CASE("build_ckg cooccurrence matches brute force on random instances") {
    Rng rng(314);
    std::uniform_int_distribution<int> count_dist(0, 8);
    for (int trial = 0; trial < 5; ++trial) {
        const int n = 10 + trial * 10;  // up to 50
        std::vector<std::pair<int, int>> edges;
        for (int i = 0; i + 1 < n; ++i) edges.push_back({i, i + 1});
        RoadGraph g = build_graph(n, edges);
        const int n_cat = 5;
        CkgConfig cfg;
        cfg.poi_categories.clear();
        for (int c = 0; c < n_cat; ++c) cfg.poi_categories.push_back("cat" + std::to_string(c));
        std::vector<std::vector<long>> counts(n, std::vector<long>(n_cat));
        for (auto& row : counts)
            for (auto& v : row) v = count_dist(rng) < 4 ? 0 : count_dist(rng);
        TripleStore s = build_ckg(g, counts, {}, {}, cfg);
        for (int a = 0; a < n_cat; ++a) {
            for (int b = a + 1; b < n_cat; ++b) {
                int both = 0;
                for (int i = 0; i < n; ++i)
                    if (counts[i][a] > 0 && counts[i][b] > 0) ++both;
                double expect = static_cast<double>(both) / n;
                CHECK(s.cooccurrence_probability(s.attribute_id("cat" + std::to_string(a)),
                                                 s.attribute_id("cat" + std::to_string(b))) ==
                      Catch::Approx(expect).margin(1e-15));
            }
        }
    }
}

TEST_CASE("build_ckg weather and linkage triples") {
    RoadGraph g = build_graph(3, {{0, 1}, {1, 2}});
    std::vector<std::string> times = {"t0", "t1", "t2", "t3", "t4", "t5"};
    std::vector<std::string> weather = {"sunny", "sunny", "cloudy", "foggy", "heavy rain", "sunny"};
    CkgConfig cfg;
    cfg.link_stride = 2;
    TripleStore s = build_ckg(g, {}, weather, times, cfg);

    int watt = s.attribute_id("weather");
    int link = s.attribute_id("observed_at");
    std::map<std::string, std::string> weather_of;
    std::set<std::pair<std::string, std::string>> links;
    for (const auto& t : s.attributes()) {
        if (t.attribute == watt)
            weather_of[s.entity_name(t.entity)] = s.value_name(watt, t.value);
        else if (t.attribute == link)
            links.insert({s.entity_name(t.entity), s.value_name(link, t.value)});
    }
    REQUIRE(weather_of.size() == times.size());
    CHECK(weather_of["t3"] == "foggy");
    CHECK(weather_of["t4"] == "heavy rain");
    // stride 2: even sections link even moments, odd sections link odd ones
    CHECK(links.count({g.node_ids[0], "t0"}) == 1);
    CHECK(links.count({g.node_ids[0], "t2"}) == 1);
    CHECK(links.count({g.node_ids[0], "t1"}) == 0);
    CHECK(links.count({g.node_ids[1], "t1"}) == 1);
    CHECK(links.count({g.node_ids[1], "t0"}) == 0);
    CHECK(links.size() == 9);  // 3 sections x 3 moments each

    CHECK(s.entity_kind(s.entity_id("t0")) == EntityKind::moment);
    CHECK(s.entity_kind(s.entity_id(g.node_ids[0])) == EntityKind::section);
}

TEST_CASE("build_ckg time-of-day attribute follows series position") {
    RoadGraph g = build_graph(2, {{0, 1}});
    std::vector<std::string> times = {"t0", "t1", "t2", "t3", "t4", "t5"};
    std::vector<std::string> weather(times.size(), "sunny");
    CkgConfig cfg;
    cfg.link_stride = 0;
    cfg.day_steps = 4;  // four-step days, so positions wrap s0..s3

    TripleStore s = build_ckg(g, {}, weather, times, cfg);
    int slot = s.attribute_id("time_of_day");
    CHECK(s.range_size(slot) == 4);
    std::map<std::string, std::string> slot_of;
    for (const auto& t : s.attributes())
        if (t.attribute == slot) slot_of[s.entity_name(t.entity)] = s.value_name(slot, t.value);
    REQUIRE(slot_of.size() == times.size());
    CHECK(slot_of["t0"] == "s0");
    CHECK(slot_of["t1"] == "s1");
    CHECK(slot_of["t2"] == "s2");
    CHECK(slot_of["t3"] == "s3");
    CHECK(slot_of["t4"] == "s0");
    CHECK(slot_of["t5"] == "s1");

    cfg.day_steps = 0;
    TripleStore off = build_ckg(g, {}, weather, times, cfg);
    CHECK_THROWS_AS(off.attribute_id("time_of_day"), std::invalid_argument);
}

TEST_CASE("build_ckg rejects unknown weather class") {
    RoadGraph g = build_graph(2, {{0, 1}});
    CHECK_THROWS_AS(build_ckg(g, {}, {"drizzle"}, {"t0"}), std::invalid_argument);
}

TEST_CASE("build_ckg second hop relation off by default") {
    RoadGraph g = build_graph(3, {{0, 1}, {1, 2}});
    TripleStore plain = build_ckg(g, {}, {}, {});
    CHECK(plain.find_relation("adj2") == -1);

    CkgConfig cfg;
    cfg.second_hop = true;
    TripleStore hop = build_ckg(g, {}, {}, {}, cfg);
    int adj2 = hop.relation_id("adj2");
    int count = 0;
    for (const auto& t : hop.relations())
        if (t.relation == adj2) ++count;
    CHECK(count == 1);
    CHECK(hop.has_relation(hop.entity_id(g.node_ids[0]), adj2, hop.entity_id(g.node_ids[2])));
}

TEST_CASE("build_ckg deterministic") {
    RoadGraph g = build_graph(4, {{0, 1}, {1, 2}, {2, 3}, {0, 3}});
    std::vector<std::string> times = {"t0", "t1", "t2"};
    std::vector<std::string> weather = {"sunny", "cloudy", "sunny"};
    std::vector<std::vector<long>> counts = {{1, 0}, {2, 3}, {0, 0}, {7, 60}};
    CkgConfig cfg;
    cfg.poi_categories = {"a", "b"};
    cfg.link_stride = 1;
    TripleStore s1 = build_ckg(g, counts, weather, times, cfg);
    TripleStore s2 = build_ckg(g, counts, weather, times, cfg);
    CHECK(s1 == s2);
}

TEST_CASE("negative_sample_relation no valid corruption") {
    TripleStore s = path_graph_store(2);
    Rng rng(1);
    RelationTriple t{0, s.relation_id("adj"), 1};
    CHECK_THROWS_AS(negative_sample_relation(t, s, rng), std::runtime_error);
}

TEST_CASE("negative_sample_relation three entities forced head") {
    TripleStore s;
    for (int i = 0; i < 3; ++i) s.add_entity("e" + std::to_string(i), EntityKind::section);
    int adj = s.add_relation("adj");
    s.add_relation_triple(0, adj, 1);
    Rng rng(99);
    for (int k = 0; k < 20; ++k) {
        auto c = negative_sample_relation({0, adj, 1}, s, rng);
        CHECK(c.head == 2);
        CHECK(c.relation == adj);
        CHECK(c.tail == 1);
    }
}

TEST_CASE("negative_sample_relation golden seeded draws") {
    TripleStore s = path_graph_store(6);
    int adj = s.relation_id("adj");
    Rng rng(42);
    RelationTriple t{0, adj, 1};
    // valid corrupted heads are {3,4,5}: 0 is the head, 1 the tail, and
    // (1,adj,2) makes head 2 collide up to orientation
    CHECK(negative_sample_relation(t, s, rng).head == 4);
    CHECK(negative_sample_relation(t, s, rng).head == 3);
    CHECK(negative_sample_relation(t, s, rng).head == 4);
    CHECK(negative_sample_relation(t, s, rng).head == 5);
}

TEST_CASE("negative_sample_relation respects entity kind") {
    TripleStore s = path_graph_store(4);
    for (int i = 0; i < 40; ++i) s.add_entity("m" + std::to_string(i), EntityKind::moment);
    int adj = s.relation_id("adj");
    Rng rng(5);
    for (int k = 0; k < 200; ++k) {
        auto c = negative_sample_relation({0, adj, 1}, s, rng);
        CHECK(s.entity_kind(c.head) == EntityKind::section);
    }
}

TEST_CASE("negative_sample_relation uniform over valid heads") {
    TripleStore s;
    for (int i = 0; i < 10; ++i) s.add_entity("e" + std::to_string(i), EntityKind::section);
    int adj = s.add_relation("adj");
    s.add_relation_triple(0, adj, 1);
    Rng rng(2024);
    std::map<int, int> freq;
    const int draws = 1000;
    for (int k = 0; k < draws; ++k) {
        auto c = negative_sample_relation({0, adj, 1}, s, rng);
        CHECK(c.head != 0);
        CHECK(c.head != 1);
        ++freq[c.head];
    }
    // valid heads {2..9}: binomial 3 sigma band around 1000/8
    const double p = 1.0 / 8.0;
    const double sigma = std::sqrt(draws * p * (1 - p));
    REQUIRE(freq.size() == 8);
    for (const auto& [head, count] : freq) {
        CHECK(count > draws * p - 3 * sigma);
        CHECK(count < draws * p + 3 * sigma);
    }
}

TEST_CASE("negative samples absent from positive set") {
    TripleStore s = path_graph_store(12);
    int adj = s.relation_id("adj");
    Rng rng(77);
    for (const auto& t : s.relations()) {
        for (int k = 0; k < 30; ++k) {
            auto c = negative_sample_relation(t, s, rng);
            CHECK_FALSE(s.has_relation_either_direction(c.head, c.relation, c.tail));
            CHECK(c.head != c.tail);
        }
    }
}

TEST_CASE("negative_sample_attribute stays in range and differs") {
    TripleStore s;
    s.add_entity("e0", EntityKind::section);
    int w = s.add_attribute("weather");
    for (const char* v : {"sunny", "cloudy", "foggy", "light rain", "heavy rain"})
        s.declare_value(w, v);
    Rng rng(3);
    std::set<int> seen;
    for (int k = 0; k < 400; ++k) {
        auto c = negative_sample_attribute({0, w, 0}, s, rng);
        CHECK(c.entity == 0);
        CHECK(c.attribute == w);
        CHECK(c.value != 0);
        CHECK(c.value >= 1);
        CHECK(c.value <= 4);
        seen.insert(c.value);
    }
    CHECK(seen.size() == 4);
}

TEST_CASE("negative_sample_attribute binary range deterministic") {
    TripleStore s;
    s.add_entity("e0", EntityKind::section);
    int a = s.add_attribute("flag");
    s.declare_value(a, "no");
    s.declare_value(a, "yes");
    Rng rng(11);
    for (int k = 0; k < 10; ++k) {
        CHECK(negative_sample_attribute({0, a, 0}, s, rng).value == 1);
        CHECK(negative_sample_attribute({0, a, 1}, s, rng).value == 0);
    }
}

TEST_CASE("negative_sample_attribute golden seeded draws") {
    TripleStore s;
    s.add_entity("e0", EntityKind::section);
    int w = s.add_attribute("weather");
    for (const char* v : {"sunny", "cloudy", "foggy", "light rain", "heavy rain"})
        s.declare_value(w, v);
    Rng rng(7);
    AttributeTriple t{0, w, 0};
    CHECK(negative_sample_attribute(t, s, rng).value == 4);
    CHECK(negative_sample_attribute(t, s, rng).value == 4);
    CHECK(negative_sample_attribute(t, s, rng).value == 1);
    CHECK(negative_sample_attribute(t, s, rng).value == 4);
}

TEST_CASE("negative_sample_attribute singleton range") {
    TripleStore s;
    s.add_entity("e0", EntityKind::section);
    int a = s.add_attribute("only");
    s.declare_value(a, "v");
    s.add_attribute_triple(0, a, 0);
    Rng rng(1);
    CHECK_THROWS_AS(negative_sample_attribute({0, a, 0}, s, rng), std::runtime_error);
}

TEST_CASE("triple store save load round trip") {
    RoadGraph g = build_graph(4, {{0, 1}, {1, 2}, {2, 3}});
    std::vector<std::string> times = {"2012-11-01 00:00", "2012-11-01 00:15"};
    std::vector<std::string> weather = {"sunny", "light rain"};
    std::vector<std::vector<long>> counts = {{15, 0}, {2, 3}, {0, 51}, {7, 6}};
    CkgConfig cfg;
    cfg.poi_categories = {"restaurant", "school"};
    cfg.link_stride = 1;
    cfg.second_hop = true;
    TripleStore s = build_ckg(g, counts, weather, times, cfg);

    std::string dir = temp_dir("roundtrip");
    save_triple_store(s, dir);
    TripleStore loaded = load_triple_store(dir);
    CHECK(loaded == s);
    CHECK(loaded.entity_kind(loaded.entity_id("2012-11-01 00:15")) == EntityKind::moment);
    // declared-but-unobserved values survive
    CHECK(loaded.range_size(loaded.attribute_id("weather")) == 5);
}

TEST_CASE("load accepts bare relation file") {
    std::string dir = temp_dir("bare");
    {
        std::ofstream out(dir + "/relations.csv");
        out << "head,relation,tail\n90217,adj,95968\n";
    }
    TripleStore s = load_triple_store(dir);
    REQUIRE(s.relations().size() == 1);
    const auto& t = s.relations()[0];
    CHECK(s.entity_name(t.head) == "90217");
    CHECK(s.relation_name(t.relation) == "adj");
    CHECK(s.entity_name(t.tail) == "95968");
}

TEST_CASE("load reports unknown relation with line number") {
    TripleStore s = path_graph_store(3);
    std::string dir = temp_dir("badrel");
    save_triple_store(s, dir);
    {
        std::ofstream out(dir + "/relations.csv", std::ios::app);
        out << "e0,bogus,e2\n";
    }
    try {
        load_triple_store(dir);
        FAIL("expected parse error");
    } catch (const std::runtime_error& e) {
        std::string msg = e.what();
        CHECK(msg.find("bogus") != std::string::npos);
        CHECK(msg.find("line 4") != std::string::npos);
        CHECK(msg.find("relations.csv") != std::string::npos);
    }
}

TEST_CASE("load reports out of range attribute value") {
    TripleStore s;
    s.add_entity("e0", EntityKind::section);
    int a = s.add_attribute("weather");
    s.declare_value(a, "sunny");
    s.add_attribute_triple(0, a, 0);
    std::string dir = temp_dir("badval");
    save_triple_store(s, dir);
    {
        std::ofstream out(dir + "/attributes.csv", std::ios::app);
        out << "e0,weather,hail\n";
    }
    CHECK_THROWS_WITH(load_triple_store(dir), Catch::Matchers::ContainsSubstring("hail") &&
                                                  Catch::Matchers::ContainsSubstring("line 3"));
}

TEST_CASE("add_relation_triple validates ids") {
    TripleStore s = path_graph_store(3);
    int adj = s.relation_id("adj");
    CHECK_THROWS_AS(s.add_relation_triple(0, adj, 9), std::invalid_argument);
    CHECK_THROWS_AS(s.add_relation_triple(1, adj, 1), std::invalid_argument);
    CHECK_THROWS_AS(s.add_relation_triple(0, 5, 1), std::invalid_argument);
}

TEST_CASE("cooccurrence probability validated and canonicalized") {
    TripleStore s;
    int a = s.add_attribute("a");
    int b = s.add_attribute("b");
    CHECK_THROWS_AS(s.add_cooccurrence(a, b, 1.5), std::invalid_argument);
    CHECK_THROWS_AS(s.add_cooccurrence(a, a, 0.5), std::invalid_argument);
    s.add_cooccurrence(b, a, 0.25);
    CHECK(s.cooccurrence()[0].attr_a == a);
    CHECK(s.cooccurrence_probability(a, b) == Catch::Approx(0.25));
    CHECK(s.cooccurrence_probability(b, a) == Catch::Approx(0.25));
}
