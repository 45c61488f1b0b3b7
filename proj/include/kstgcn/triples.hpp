#pragma once

// City knowledge graph: relation triples (section adjacency), attribute
// triples (POI buckets, weather classes, section-to-moment links) and
// attribute co-occurrence probabilities, with the vocabularies and indexes
// needed for embedding training.

#include "kstgcn/common.hpp"
#include "kstgcn/csv.hpp"
#include "kstgcn/graph.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace kstgcn {

enum class EntityKind { section, moment };

struct RelationTriple {
    int head = 0;
    int relation = 0;
    int tail = 0;
    bool operator==(const RelationTriple&) const = default;
};

struct AttributeTriple {
    int entity = 0;
    int attribute = 0;
    int value = 0;  // index into the attribute's declared value range
    bool operator==(const AttributeTriple&) const = default;
};

struct CooccurrenceTriple {
    int attr_a = 0;
    int attr_b = 0;
    double probability = 0.0;
};

class TripleStore {
public:
    // --- vocabulary -------------------------------------------------------

    int add_entity(const std::string& name, EntityKind kind) {
        auto it = entity_index_.find(name);
        if (it != entity_index_.end()) return it->second;
        int id = static_cast<int>(entity_names_.size());
        entity_names_.push_back(name);
        entity_kinds_.push_back(kind);
        entity_index_[name] = id;
        attrs_by_entity_.emplace_back();
        return id;
    }

    int add_relation(const std::string& name) {
        auto it = relation_index_.find(name);
        if (it != relation_index_.end()) return it->second;
        int id = static_cast<int>(relation_names_.size());
        relation_names_.push_back(name);
        relation_index_[name] = id;
        return id;
    }

    int add_attribute(const std::string& name) {
        auto it = attribute_index_.find(name);
        if (it != attribute_index_.end()) return it->second;
        int id = static_cast<int>(attribute_names_.size());
        attribute_names_.push_back(name);
        attribute_index_[name] = id;
        value_names_.emplace_back();
        value_index_.emplace_back();
        return id;
    }

    int declare_value(int attribute, const std::string& value_name) {
        auto& idx = value_index_[attribute];
        auto it = idx.find(value_name);
        if (it != idx.end()) return it->second;
        int id = static_cast<int>(value_names_[attribute].size());
        value_names_[attribute].push_back(value_name);
        idx[value_name] = id;
        return id;
    }

    int entity_id(const std::string& name) const { return lookup(entity_index_, name, "entity"); }
    int relation_id(const std::string& name) const {
        return lookup(relation_index_, name, "relation");
    }
    int attribute_id(const std::string& name) const {
        return lookup(attribute_index_, name, "attribute");
    }
    int value_id(int attribute, const std::string& name) const {
        return lookup(value_index_[attribute], name, "value");
    }

    int find_entity(const std::string& name) const {
        auto it = entity_index_.find(name);
        return it == entity_index_.end() ? -1 : it->second;
    }
    int find_relation(const std::string& name) const {
        auto it = relation_index_.find(name);
        return it == relation_index_.end() ? -1 : it->second;
    }
    int find_attribute(const std::string& name) const {
        auto it = attribute_index_.find(name);
        return it == attribute_index_.end() ? -1 : it->second;
    }
    int find_value(int attribute, const std::string& name) const {
        const auto& idx = value_index_[attribute];
        auto it = idx.find(name);
        return it == idx.end() ? -1 : it->second;
    }

    int n_entities() const { return static_cast<int>(entity_names_.size()); }
    int n_relations() const { return static_cast<int>(relation_names_.size()); }
    int n_attributes() const { return static_cast<int>(attribute_names_.size()); }
    int range_size(int attribute) const {
        return static_cast<int>(value_names_[attribute].size());
    }
    EntityKind entity_kind(int e) const { return entity_kinds_[e]; }
    const std::string& entity_name(int e) const { return entity_names_[e]; }
    const std::string& relation_name(int r) const { return relation_names_[r]; }
    const std::string& attribute_name(int a) const { return attribute_names_[a]; }
    const std::string& value_name(int a, int v) const { return value_names_[a][v]; }

    std::vector<int> entities_of_kind(EntityKind k) const {
        std::vector<int> out;
        for (int e = 0; e < n_entities(); ++e)
            if (entity_kinds_[e] == k) out.push_back(e);
        return out;
    }

    // --- triples ----------------------------------------------------------

    void add_relation_triple(int head, int relation, int tail) {
        require(head >= 0 && head < n_entities() && tail >= 0 && tail < n_entities(),
                "relation triple: entity id out of range");
        require(relation >= 0 && relation < n_relations(),
                "relation triple: relation id out of range");
        require(head != tail, "relation triple: head must differ from tail");
        relations_.push_back({head, relation, tail});
        relation_set_.insert(pack(head, relation, tail));
    }

    void add_attribute_triple(int entity, int attribute, int value) {
        require(entity >= 0 && entity < n_entities(),
                "attribute triple: entity id out of range");
        require(attribute >= 0 && attribute < n_attributes(),
                "attribute triple: attribute id out of range");
        require(value >= 0 && value < range_size(attribute),
                "attribute triple: value outside the attribute's declared range");
        attrs_by_entity_[entity].push_back(static_cast<int>(attributes_.size()));
        attributes_.push_back({entity, attribute, value});
    }

    void add_cooccurrence(int attr_a, int attr_b, double probability) {
        require(probability >= 0.0 && probability <= 1.0,
                "cooccurrence probability must lie in [0,1]");
        require(attr_a != attr_b, "cooccurrence pair must be distinct");
        if (attr_a > attr_b) std::swap(attr_a, attr_b);
        cooccurrence_.push_back({attr_a, attr_b, probability});
    }

    const std::vector<RelationTriple>& relations() const { return relations_; }
    const std::vector<AttributeTriple>& attributes() const { return attributes_; }
    const std::vector<CooccurrenceTriple>& cooccurrence() const { return cooccurrence_; }

    bool has_relation(int head, int relation, int tail) const {
        return relation_set_.count(pack(head, relation, tail)) > 0;
    }

    // Membership up to orientation: road adjacency is undirected and stored
    // in a single canonical direction.
    bool has_relation_either_direction(int head, int relation, int tail) const {
        return has_relation(head, relation, tail) || has_relation(tail, relation, head);
    }

    const std::vector<int>& attribute_triples_of(int entity) const {
        return attrs_by_entity_[entity];
    }

    double cooccurrence_probability(int attr_a, int attr_b) const {
        if (attr_a > attr_b) std::swap(attr_a, attr_b);
        for (const auto& c : cooccurrence_)
            if (c.attr_a == attr_a && c.attr_b == attr_b) return c.probability;
        return 0.0;
    }

    bool operator==(const TripleStore& other) const {
        return entity_names_ == other.entity_names_ && entity_kinds_ == other.entity_kinds_ &&
               relation_names_ == other.relation_names_ &&
               attribute_names_ == other.attribute_names_ && value_names_ == other.value_names_ &&
               relations_ == other.relations_ && attributes_ == other.attributes_ &&
               cooccurrence_eq(other);
    }

private:
    static int lookup(const std::unordered_map<std::string, int>& m, const std::string& name,
                      const char* what) {
        auto it = m.find(name);
        if (it == m.end())
            throw std::invalid_argument(std::string("unknown ") + what + " id: " + name);
        return it->second;
    }

    // Fixed-width packing so keys stay valid when the vocabulary grows after
    // triples were inserted. 21 bits per field caps ids at ~2M.
    static int64_t pack(int head, int relation, int tail) {
        require(head < (1 << 21) && relation < (1 << 21) && tail < (1 << 21),
                "triple id exceeds packing capacity");
        return (static_cast<int64_t>(head) << 42) | (static_cast<int64_t>(relation) << 21) |
               static_cast<int64_t>(tail);
    }

    bool cooccurrence_eq(const TripleStore& other) const {
        if (cooccurrence_.size() != other.cooccurrence_.size()) return false;
        for (size_t i = 0; i < cooccurrence_.size(); ++i) {
            const auto& a = cooccurrence_[i];
            const auto& b = other.cooccurrence_[i];
            if (a.attr_a != b.attr_a || a.attr_b != b.attr_b ||
                std::abs(a.probability - b.probability) > 1e-15)
                return false;
        }
        return true;
    }

    std::vector<std::string> entity_names_;
    std::vector<EntityKind> entity_kinds_;
    std::unordered_map<std::string, int> entity_index_;
    std::vector<std::string> relation_names_;
    std::unordered_map<std::string, int> relation_index_;
    std::vector<std::string> attribute_names_;
    std::unordered_map<std::string, int> attribute_index_;
    std::vector<std::vector<std::string>> value_names_;
    std::vector<std::unordered_map<std::string, int>> value_index_;

    std::vector<RelationTriple> relations_;
    std::vector<AttributeTriple> attributes_;
    std::vector<CooccurrenceTriple> cooccurrence_;
    std::unordered_set<int64_t> relation_set_;
    std::vector<std::vector<int>> attrs_by_entity_;
};

// ---------------------------------------------------------------------------
// CKG construction
// ---------------------------------------------------------------------------

inline const std::vector<std::string>& default_poi_categories() {
    static const std::vector<std::string> cats = {
        "food services",      "enterprises",      "shopping services",
        "transportation services", "education services", "living services",
        "medical services",   "accommodation services", "others"};
    return cats;
}

inline const std::vector<std::string>& default_weather_classes() {
    static const std::vector<std::string> classes = {"sunny", "cloudy", "foggy", "light rain",
                                                     "heavy rain"};
    return classes;
}

struct CkgConfig {
    std::vector<std::string> poi_categories = default_poi_categories();
    std::vector<std::string> weather_classes = default_weather_classes();
    // POI counts are bucketed into ordinal classes so every attribute has a
    // finite value range.
    std::vector<std::string> poi_buckets = {"0", "1-5", "6-15", "16-50", ">50"};
    // Every link_stride-th moment is attached to each section (staggered by
    // section index); 0 disables the linkage triples.
    int link_stride = 96;
    // Moments carry an hour-of-day attribute derived from their position in
    // the series; day_steps is the series period, 0 disables the attribute.
    int day_steps = 96;
    bool second_hop = false;  // emit the distance-2 adjacency relation
};

inline int poi_bucket(long count) {
    if (count <= 0) return 0;
    if (count <= 5) return 1;
    if (count <= 15) return 2;
    if (count <= 50) return 3;
    return 4;
}

// Builds the CKG from the road graph, per-node POI counts (n x categories),
// and the global weather series. Deterministic for identical inputs.
inline TripleStore build_ckg(const RoadGraph& g,
                             const std::vector<std::vector<long>>& poi_counts,
                             const std::vector<std::string>& weather_series,
                             const std::vector<std::string>& time_index,
                             const CkgConfig& config = {}) {
    require(weather_series.size() >= time_index.size(),
            "build_ckg: weather series must cover the time index");
    TripleStore store;

    std::vector<int> section_ids;
    section_ids.reserve(g.n_nodes);
    for (int i = 0; i < g.n_nodes; ++i)
        section_ids.push_back(store.add_entity(g.node_ids[i], EntityKind::section));
    std::vector<int> moment_ids;
    moment_ids.reserve(time_index.size());
    for (const auto& t : time_index)
        moment_ids.push_back(store.add_entity(t, EntityKind::moment));

    const int adj = store.add_relation("adj");
    for (int i = 0; i < g.n_nodes; ++i)
        for (int j = i + 1; j < g.n_nodes; ++j)
            if (g.adjacency(i, j) != 0.0)
                store.add_relation_triple(section_ids[i], adj, section_ids[j]);
    if (config.second_hop) {
        const int adj2 = store.add_relation("adj2");
        for (const auto& [i, j] : distance_two_pairs(g))
            store.add_relation_triple(section_ids[i], adj2, section_ids[j]);
    }

    // POI attributes, one per section and category, bucketed.
    std::vector<int> poi_attr_ids;
    for (const auto& cat : config.poi_categories) {
        int a = store.add_attribute(cat);
        for (const auto& b : config.poi_buckets) store.declare_value(a, b);
        poi_attr_ids.push_back(a);
    }
    if (!poi_counts.empty()) {
        require(poi_counts.size() == static_cast<size_t>(g.n_nodes),
                "build_ckg: poi_counts rows must match node count");
        for (int i = 0; i < g.n_nodes; ++i) {
            require(poi_counts[i].size() == config.poi_categories.size(),
                    "build_ckg: poi_counts columns must match category count");
            for (size_t c = 0; c < poi_counts[i].size(); ++c)
                store.add_attribute_triple(section_ids[i], poi_attr_ids[c],
                                           poi_bucket(poi_counts[i][c]));
        }
    }

    // Weather attaches to moment entities; sections link to moments.
    const int weather = store.add_attribute("weather");
    for (const auto& w : config.weather_classes) store.declare_value(weather, w);
    std::unordered_map<std::string, int> weather_value;
    for (size_t i = 0; i < config.weather_classes.size(); ++i)
        weather_value[config.weather_classes[i]] = static_cast<int>(i);
    for (size_t t = 0; t < time_index.size(); ++t) {
        auto it = weather_value.find(weather_series[t]);
        require(it != weather_value.end(),
                "build_ckg: unknown weather class '" + weather_series[t] + "'");
        store.add_attribute_triple(moment_ids[t], weather, it->second);
    }
    if (config.day_steps > 0 && !time_index.empty()) {
        const int slot_attr = store.add_attribute("time_of_day");
        for (int k = 0; k < config.day_steps; ++k)
            store.declare_value(slot_attr, "s" + std::to_string(k));
        for (size_t t = 0; t < time_index.size(); ++t)
            store.add_attribute_triple(moment_ids[t], slot_attr,
                                       static_cast<int>(t) % config.day_steps);
    }
    if (config.link_stride > 0 && !time_index.empty()) {
        const int observed_at = store.add_attribute("observed_at");
        for (const auto& t : time_index) store.declare_value(observed_at, t);
        for (int i = 0; i < g.n_nodes; ++i)
            for (size_t t = i % config.link_stride; t < time_index.size();
                 t += config.link_stride)
                store.add_attribute_triple(section_ids[i], observed_at, static_cast<int>(t));
    }

    // Empirical co-occurrence of POI categories over sections: fraction of
    // sections carrying a nonzero count for both.
    if (!poi_counts.empty() && g.n_nodes > 0) {
        const size_t n_cat = config.poi_categories.size();
        for (size_t a = 0; a < n_cat; ++a) {
            for (size_t b = a + 1; b < n_cat; ++b) {
                int both = 0;
                for (int i = 0; i < g.n_nodes; ++i)
                    if (poi_counts[i][a] > 0 && poi_counts[i][b] > 0) ++both;
                if (both > 0)
                    store.add_cooccurrence(poi_attr_ids[a], poi_attr_ids[b],
                                           static_cast<double>(both) / g.n_nodes);
            }
        }
    }
    return store;
}

// ---------------------------------------------------------------------------
// Negative sampling for embedding training
// ---------------------------------------------------------------------------

// Replaces the head with a uniformly random distinct entity of the same kind.
// The corrupted triple is guaranteed absent from the positive set (in either
// orientation) and is never a self-loop.
inline RelationTriple negative_sample_relation(const RelationTriple& t, const TripleStore& store,
                                               Rng& rng, int max_retries = 100) {
    const auto candidates = store.entities_of_kind(store.entity_kind(t.head));
    require(candidates.size() >= 2, "negative_sample_relation: need at least 2 entities");
    std::uniform_int_distribution<size_t> pick(0, candidates.size() - 1);
    for (int attempt = 0; attempt < max_retries; ++attempt) {
        int h = candidates[pick(rng)];
        if (h == t.head || h == t.tail) continue;
        if (store.has_relation_either_direction(h, t.relation, t.tail)) continue;
        return {h, t.relation, t.tail};
    }
    throw std::runtime_error("negative_sample_relation: no valid corruption found after " +
                             std::to_string(max_retries) + " retries");
}

// Same entity and attribute, uniformly random different value from the
// attribute's declared range.
inline AttributeTriple negative_sample_attribute(const AttributeTriple& t,
                                                 const TripleStore& store, Rng& rng) {
    const int range = store.range_size(t.attribute);
    if (range < 2)
        throw std::runtime_error("negative_sample_attribute: value range of '" +
                                 store.attribute_name(t.attribute) + "' is a singleton");
    std::uniform_int_distribution<int> pick(0, range - 2);
    int v = pick(rng);
    if (v >= t.value) ++v;
    return {t.entity, t.attribute, v};
}

// ---------------------------------------------------------------------------
// Serialization: relations.csv / attributes.csv / cooccurrence.csv + vocab.json
// ---------------------------------------------------------------------------

inline void save_triple_store(const TripleStore& store, const std::string& dir) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);

    csv::Writer rel(dir + "/relations.csv");
    rel.row({"head", "relation", "tail"});
    for (const auto& t : store.relations())
        rel.row({store.entity_name(t.head), store.relation_name(t.relation),
                 store.entity_name(t.tail)});

    csv::Writer att(dir + "/attributes.csv");
    att.row({"entity", "attribute", "value"});
    for (const auto& t : store.attributes())
        att.row({store.entity_name(t.entity), store.attribute_name(t.attribute),
                 store.value_name(t.attribute, t.value)});

    csv::Writer coo(dir + "/cooccurrence.csv");
    coo.row({"attr_a", "attr_b", "probability"});
    for (const auto& c : store.cooccurrence())
        coo.row({store.attribute_name(c.attr_a), store.attribute_name(c.attr_b),
                 csv::format_double(c.probability)});

    // The three CSV files alone cannot carry declared-but-unobserved ids, so
    // the vocabularies ride along in a sidecar.
    nlohmann::json vocab;
    for (int e = 0; e < store.n_entities(); ++e)
        vocab["entities"].push_back(
            {{"name", store.entity_name(e)},
             {"kind", store.entity_kind(e) == EntityKind::section ? "section" : "moment"}});
    for (int r = 0; r < store.n_relations(); ++r)
        vocab["relations"].push_back(store.relation_name(r));
    for (int a = 0; a < store.n_attributes(); ++a) {
        nlohmann::json values = nlohmann::json::array();
        for (int v = 0; v < store.range_size(a); ++v) values.push_back(store.value_name(a, v));
        vocab["attributes"].push_back({{"name", store.attribute_name(a)}, {"values", values}});
    }
    std::ofstream out(dir + "/vocab.json");
    out << vocab.dump(2) << "\n";
}

inline TripleStore load_triple_store(const std::string& dir) {
    namespace fs = std::filesystem;
    TripleStore store;
    const std::string vocab_path = dir + "/vocab.json";
    const bool strict = fs::exists(vocab_path);
    if (strict) {
        std::ifstream in(vocab_path);
        nlohmann::json vocab;
        try {
            in >> vocab;
        } catch (const std::exception& e) {
            throw std::runtime_error(vocab_path + ": " + e.what());
        }
        for (const auto& e : vocab.value("entities", nlohmann::json::array()))
            store.add_entity(e.at("name").get<std::string>(),
                             e.at("kind").get<std::string>() == "moment" ? EntityKind::moment
                                                                         : EntityKind::section);
        for (const auto& r : vocab.value("relations", nlohmann::json::array()))
            store.add_relation(r.get<std::string>());
        for (const auto& a : vocab.value("attributes", nlohmann::json::array())) {
            int id = store.add_attribute(a.at("name").get<std::string>());
            for (const auto& v : a.at("values")) store.declare_value(id, v.get<std::string>());
        }
    }

    auto fail = [](const std::string& path, int line, const std::string& msg) {
        throw std::runtime_error(path + " line " + std::to_string(line) + ": " + msg);
    };

    const std::string rel_path = dir + "/relations.csv";
    if (fs::exists(rel_path)) {
        csv::Table t = csv::read_file(rel_path);
        for (size_t r = 0; r < t.rows.size(); ++r) {
            const auto& row = t.rows[r];
            const int line = t.line_numbers[r];
            if (row.size() != 3) fail(rel_path, line, "expected 3 fields");
            if (strict) {
                if (store.find_entity(row[0]) < 0) fail(rel_path, line, "unknown entity " + row[0]);
                if (store.find_entity(row[2]) < 0) fail(rel_path, line, "unknown entity " + row[2]);
                if (store.find_relation(row[1]) < 0)
                    fail(rel_path, line, "unknown relation " + row[1]);
                store.add_relation_triple(store.entity_id(row[0]), store.relation_id(row[1]),
                                          store.entity_id(row[2]));
            } else {
                store.add_relation_triple(store.add_entity(row[0], EntityKind::section),
                                          store.add_relation(row[1]),
                                          store.add_entity(row[2], EntityKind::section));
            }
        }
    }

    const std::string att_path = dir + "/attributes.csv";
    if (fs::exists(att_path)) {
        csv::Table t = csv::read_file(att_path);
        for (size_t r = 0; r < t.rows.size(); ++r) {
            const auto& row = t.rows[r];
            const int line = t.line_numbers[r];
            if (row.size() != 3) fail(att_path, line, "expected 3 fields");
            if (strict) {
                if (store.find_entity(row[0]) < 0) fail(att_path, line, "unknown entity " + row[0]);
                const int a = store.find_attribute(row[1]);
                if (a < 0) fail(att_path, line, "unknown attribute " + row[1]);
                if (store.find_value(a, row[2]) < 0)
                    fail(att_path, line, "value " + row[2] + " outside range of " + row[1]);
                store.add_attribute_triple(store.entity_id(row[0]), a, store.value_id(a, row[2]));
            } else {
                int e = store.add_entity(row[0], EntityKind::section);
                int a = store.add_attribute(row[1]);
                store.add_attribute_triple(e, a, store.declare_value(a, row[2]));
            }
        }
    }

    const std::string coo_path = dir + "/cooccurrence.csv";
    if (fs::exists(coo_path)) {
        csv::Table t = csv::read_file(coo_path);
        for (size_t r = 0; r < t.rows.size(); ++r) {
            const auto& row = t.rows[r];
            const int line = t.line_numbers[r];
            if (row.size() != 3) fail(coo_path, line, "expected 3 fields");
            double p = 0.0;
            try {
                p = csv::parse_double(row[2], coo_path);
            } catch (const std::exception&) {
                fail(coo_path, line, "bad probability '" + row[2] + "'");
            }
            int a = 0, b = 0;
            if (strict) {
                if (store.find_attribute(row[0]) < 0)
                    fail(coo_path, line, "unknown attribute " + row[0]);
                if (store.find_attribute(row[1]) < 0)
                    fail(coo_path, line, "unknown attribute " + row[1]);
                a = store.attribute_id(row[0]);
                b = store.attribute_id(row[1]);
            } else {
                a = store.add_attribute(row[0]);
                b = store.add_attribute(row[1]);
            }
            store.add_cooccurrence(a, b, p);
        }
    }
    return store;
}

}  // namespace kstgcn
