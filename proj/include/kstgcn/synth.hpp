#pragma once

// Synthetic city benchmark: random geometric road network, heavy-tailed POI
// counts, a sticky five-class weather chain, and a traffic simulator whose
// speeds respond to POI load and weather. Everything regenerates
// bit-identically from the recorded parameters.

#include "kstgcn/common.hpp"
#include "kstgcn/csv.hpp"
#include "kstgcn/graph.hpp"
#include "kstgcn/speed.hpp"
#include "kstgcn/triples.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <numeric>
#include <string>
#include <unordered_map>
#include <vector>

namespace kstgcn {

struct EffectConfig {
    double poi_weight = 8.0;      // km/h slowdown at rush peak per unit load
    double weather_weight = 1.0;  // multiplies the per-class penalties
    double coupling = 0.3;        // neighbor deviation feedback per step
    double sigma_obs = 2.0;       // observation noise std, km/h

    bool operator==(const EffectConfig&) const = default;
};

struct CityParams {
    int n_nodes = 156;
    int steps = 2976;  // 31 days at 15-minute intervals
    double avg_degree = 3.0;
    uint64_t seed = 1;
    EffectConfig effects;

    bool operator==(const CityParams&) const = default;
};

struct CityScenario {
    RoadGraph graph;
    std::vector<std::vector<long>> poi_counts;  // node x category
    std::vector<std::string> weather;           // class name per step
    SpeedTensor speeds;
    CityParams params;
};

inline nlohmann::json to_json(const EffectConfig& e) {
    return {{"poi_weight", e.poi_weight},
            {"weather_weight", e.weather_weight},
            {"coupling", e.coupling},
            {"sigma_obs", e.sigma_obs}};
}

inline EffectConfig effect_config_from_json(const nlohmann::json& j) {
    EffectConfig e;
    e.poi_weight = j.value("poi_weight", e.poi_weight);
    e.weather_weight = j.value("weather_weight", e.weather_weight);
    e.coupling = j.value("coupling", e.coupling);
    e.sigma_obs = j.value("sigma_obs", e.sigma_obs);
    return e;
}

inline nlohmann::json to_json(const CityParams& p) {
    return {{"n_nodes", p.n_nodes},
            {"steps", p.steps},
            {"avg_degree", p.avg_degree},
            {"seed", p.seed},
            {"effects", to_json(p.effects)}};
}

inline CityParams city_params_from_json(const nlohmann::json& j) {
    CityParams p;
    p.n_nodes = j.value("n_nodes", p.n_nodes);
    p.steps = j.value("steps", p.steps);
    p.avg_degree = j.value("avg_degree", p.avg_degree);
    p.seed = j.value("seed", p.seed);
    if (j.contains("effects")) p.effects = effect_config_from_json(j.at("effects"));
    return p;
}

// --- road network ----------------------------------------------------------

// Random geometric graph: n points in the unit square, the shortest
// round(n*avg_degree/2) pairs become edges, then the shortest
// component-bridging pairs are added until connected.
inline RoadGraph generate_network(int n, double avg_degree, uint64_t seed) {
    require(n >= 2, "generate_network: need at least 2 nodes");
    require(avg_degree >= 1.0, "generate_network: average degree must be at least 1");
    const long target = std::lround(n * avg_degree / 2.0);
    const long max_edges = static_cast<long>(n) * (n - 1) / 2;
    require(target <= max_edges,
            "generate_network: average degree asks for more edges than node pairs");

    Rng rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> xs(n), ys(n);
    for (int i = 0; i < n; ++i) {
        xs[i] = u(rng);
        ys[i] = u(rng);
    }

    struct Pair {
        double d2;
        int a, b;
    };
    std::vector<Pair> pairs;
    pairs.reserve(max_edges);
    for (int a = 0; a < n; ++a)
        for (int b = a + 1; b < n; ++b) {
            const double dx = xs[a] - xs[b], dy = ys[a] - ys[b];
            pairs.push_back({dx * dx + dy * dy, a, b});
        }
    std::sort(pairs.begin(), pairs.end(), [](const Pair& l, const Pair& r) {
        if (l.d2 != r.d2) return l.d2 < r.d2;
        if (l.a != r.a) return l.a < r.a;
        return l.b < r.b;
    });

    std::vector<int> parent(n);
    std::iota(parent.begin(), parent.end(), 0);
    std::function<int(int)> find = [&](int v) {
        while (parent[v] != v) v = parent[v] = parent[parent[v]];
        return v;
    };
    int components = n;
    std::vector<std::pair<int, int>> edges;
    auto add_edge = [&](const Pair& p) {
        edges.push_back({p.a, p.b});
        const int ra = find(p.a), rb = find(p.b);
        if (ra != rb) {
            parent[ra] = rb;
            --components;
        }
    };
    for (long i = 0; i < target; ++i) add_edge(pairs[i]);
    for (long i = target; components > 1 && i < static_cast<long>(pairs.size()); ++i)
        if (find(pairs[i].a) != find(pairs[i].b)) add_edge(pairs[i]);
    return build_graph(n, edges);
}

// --- attributes ------------------------------------------------------------

struct CityAttributes {
    std::vector<std::vector<long>> poi_counts;
    std::vector<std::string> weather;
};

// Sticky chain: stay with probability 0.9, otherwise move uniformly.
inline Mat weather_transition_matrix() {
    const int k = static_cast<int>(default_weather_classes().size());
    Mat m = Mat::Constant(k, k, 0.1 / (k - 1));
    m.diagonal().setConstant(0.9);
    return m;
}

inline CityAttributes generate_attributes(const RoadGraph& g, int steps, uint64_t seed) {
    require(steps >= 1, "generate_attributes: need at least one step");
    Rng rng(seed);
    CityAttributes out;

    // Heavy-tailed counts; per-category log-scale locations so shopping and
    // food dominate while medical and accommodation stay sparse. A diffused
    // latent field makes districts jointly busy: neighboring sections share
    // POI character instead of drawing independently.
    static const std::array<double, 9> mu = {2.0, 1.6, 2.2, 0.7, 0.9, 1.8, 0.5, 0.8, 1.2};
    std::normal_distribution<double> gauss(0.0, 1.0);
    Vec latent(g.n_nodes);
    for (int v = 0; v < g.n_nodes; ++v) latent(v) = gauss(rng);
    for (int round = 0; round < 2; ++round) {
        Vec mixed = latent;
        for (int v = 0; v < g.n_nodes; ++v) {
            const auto nbrs = g.neighbors(v);
            if (nbrs.empty()) continue;
            double sum = 0.0;
            for (int u : nbrs) sum += latent(u);
            mixed(v) = 0.5 * latent(v) + 0.5 * sum / static_cast<double>(nbrs.size());
        }
        latent = mixed;
    }
    const double spread = std::sqrt(latent.squaredNorm() / static_cast<double>(g.n_nodes));
    if (spread > 1e-9) latent /= spread;
    out.poi_counts.assign(g.n_nodes, std::vector<long>(mu.size(), 0));
    for (int v = 0; v < g.n_nodes; ++v)
        for (size_t c = 0; c < mu.size(); ++c) {
            const double log_count = mu[c] + 0.8 * latent(v) + 0.6 * gauss(rng);
            out.poi_counts[v][c] = static_cast<long>(std::floor(std::exp(log_count)));
        }

    const auto& classes = default_weather_classes();
    const Mat trans = weather_transition_matrix();
    std::uniform_int_distribution<int> start(0, static_cast<int>(classes.size()) - 1);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    int state = start(rng);
    out.weather.reserve(steps);
    for (int t = 0; t < steps; ++t) {
        out.weather.push_back(classes[state]);
        const double r = u(rng);
        double cum = 0.0;
        for (int next = 0; next < trans.cols(); ++next) {
            cum += trans(state, next);
            if (r < cum) {
                state = next;
                break;
            }
        }
    }
    return out;
}

// --- traffic simulator -----------------------------------------------------

// km/h penalty per weather class, in default_weather_classes order.
inline const std::array<double, 5>& weather_penalties() {
    static const std::array<double, 5> p = {0.0, 1.0, 4.0, 6.0, 12.0};
    return p;
}

// Weighted POI counts normalized to mean 1 across nodes.
inline Vec poi_loads(const std::vector<std::vector<long>>& poi_counts) {
    static const std::array<double, 9> w = {1.0, 0.8, 1.2, 0.6, 0.5, 0.9, 0.4, 0.3, 0.2};
    const int n = static_cast<int>(poi_counts.size());
    require(n > 0, "poi_loads: empty counts");
    Vec raw(n);
    for (int v = 0; v < n; ++v) {
        require(poi_counts[v].size() == w.size(), "poi_loads: expected one count per category");
        double sum = 0.0;
        for (size_t c = 0; c < w.size(); ++c) sum += w[c] * static_cast<double>(poi_counts[v][c]);
        raw(v) = sum;
    }
    const double mean = raw.mean();
    if (mean <= 0.0) return Vec::Zero(n);
    return raw / mean;
}

// Busier sections suffer more from bad weather.
inline double popularity_factor(double load) { return 0.5 + 0.5 * load; }

inline double diurnal_base(int t) {
    return 45.0 + 15.0 * std::cos(2.0 * std::numbers::pi * static_cast<double>(t % 96) / 96.0);
}

// Morning and evening rush bumps, width 1 h, peak value 1. Kept narrow so a
// section's dip depth is hard to anticipate from a short speed window alone.
inline double rush_factor(int t) {
    const double h = static_cast<double>(t % 96) / 4.0;
    auto bump = [](double x) { return std::exp(-0.5 * x * x); };
    return bump(h - 8.0) + bump(h - 18.0);
}

inline SpeedTensor simulate_traffic(const RoadGraph& g,
                                    const std::vector<std::vector<long>>& poi_counts,
                                    const std::vector<std::string>& weather,
                                    const EffectConfig& fx, uint64_t seed) {
    const int n = g.n_nodes;
    const int steps = static_cast<int>(weather.size());
    require(steps >= 1, "simulate_traffic: weather series is empty");
    require(static_cast<int>(poi_counts.size()) == n,
            "simulate_traffic: poi_counts rows must match node count");
    require(fx.poi_weight >= 0.0 && fx.weather_weight >= 0.0,
            "simulate_traffic: effect weights must be nonnegative");
    require(fx.coupling >= 0.0 && fx.coupling < 1.0,
            "simulate_traffic: coupling must lie in [0, 1)");
    require(fx.sigma_obs >= 0.0, "simulate_traffic: noise std must be nonnegative");

    const auto& classes = default_weather_classes();
    std::unordered_map<std::string, int> class_index;
    for (size_t i = 0; i < classes.size(); ++i) class_index[classes[i]] = static_cast<int>(i);
    std::vector<double> penalty(steps);
    for (int t = 0; t < steps; ++t) {
        auto it = class_index.find(weather[t]);
        require(it != class_index.end(),
                "simulate_traffic: unknown weather class '" + weather[t] + "'");
        penalty[t] = weather_penalties()[it->second];
    }

    const Vec load = poi_loads(poi_counts);
    Rng rng(seed);
    std::normal_distribution<double> noise(0.0, fx.sigma_obs > 0.0 ? fx.sigma_obs : 1.0);
    std::vector<std::vector<int>> nbrs(n);
    for (int v = 0; v < n; ++v) nbrs[v] = g.neighbors(v);

    SpeedTensor out;
    out.values.resize(steps, n);
    Vec dev_prev = Vec::Zero(n), dev = Vec::Zero(n);
    for (int t = 0; t < steps; ++t) {
        for (int v = 0; v < n; ++v) {
            double mean_nb = 0.0;
            if (t > 0 && !nbrs[v].empty()) {
                for (int u : nbrs[v]) mean_nb += dev_prev(u);
                mean_nb /= static_cast<double>(nbrs[v].size());
            }
            dev(v) = fx.coupling * mean_nb + (fx.sigma_obs > 0.0 ? noise(rng) : 0.0);
            const double det = diurnal_base(t) - fx.poi_weight * load(v) * rush_factor(t) -
                               fx.weather_weight * penalty[t] * popularity_factor(load(v));
            out.values(t, v) = std::clamp(det + dev(v), 5.0, 80.0);
        }
        std::swap(dev_prev, dev);
    }
    out.node_ids = g.node_ids;
    out.time_ids.reserve(steps);
    for (int t = 0; t < steps; ++t) out.time_ids.push_back("t" + std::to_string(t));
    return out;
}

inline CityScenario generate_city(const CityParams& p) {
    CityScenario s;
    s.params = p;
    s.graph = generate_network(p.n_nodes, p.avg_degree, p.seed);
    CityAttributes attrs = generate_attributes(s.graph, p.steps, p.seed + 1);
    s.poi_counts = std::move(attrs.poi_counts);
    s.weather = std::move(attrs.weather);
    s.speeds = simulate_traffic(s.graph, s.poi_counts, s.weather, p.effects, p.seed + 2);
    return s;
}

// --- input perturbation ----------------------------------------------------

struct GaussianNoise {
    double sigma = 0.0;  // std on the min-max normalized scale
};

struct PoissonNoise {
    double lambda = 0.0;
};

// Adds zero-mean noise; output is intentionally not re-clipped. Gaussian
// draws are scaled by the value span so sigma reads on the normalized scale;
// Poisson draws are mean-centered counts applied in km/h.
inline SpeedTensor perturb(const SpeedTensor& t, const GaussianNoise& spec, uint64_t seed) {
    require(spec.sigma > 0.0, "perturb: sigma must be positive");
    validate(t);
    const double span = t.values.maxCoeff() - t.values.minCoeff();
    Rng rng(seed);
    std::normal_distribution<double> g(0.0, 1.0);
    SpeedTensor out = t;
    for (int i = 0; i < out.values.rows(); ++i)
        for (int j = 0; j < out.values.cols(); ++j)
            out.values(i, j) += spec.sigma * span * g(rng);
    return out;
}

inline SpeedTensor perturb(const SpeedTensor& t, const PoissonNoise& spec, uint64_t seed) {
    require(spec.lambda > 0.0, "perturb: lambda must be positive");
    validate(t);
    Rng rng(seed);
    std::poisson_distribution<long> d(spec.lambda);
    SpeedTensor out = t;
    for (int i = 0; i < out.values.rows(); ++i)
        for (int j = 0; j < out.values.cols(); ++j)
            out.values(i, j) += static_cast<double>(d(rng)) - spec.lambda;
    return out;
}

// --- persistence -----------------------------------------------------------

inline void save_scenario(const CityScenario& s, const std::string& dir) {
    namespace fs = std::filesystem;
    require(s.weather.size() == s.speeds.time_ids.size(),
            "save_scenario: weather must cover every speed step");
    fs::create_directories(dir);
    save_graph(s.graph, dir + "/edges.csv", dir + "/nodes.csv");

    const auto& cats = default_poi_categories();
    csv::Writer poi(dir + "/poi.csv");
    poi.row({"node", "category", "count"});
    for (int v = 0; v < s.graph.n_nodes; ++v)
        for (size_t c = 0; c < cats.size(); ++c)
            poi.row({s.graph.node_ids[v], cats[c], std::to_string(s.poi_counts[v][c])});

    csv::Writer weather(dir + "/weather.csv");
    weather.row({"time_id", "class"});
    for (size_t t = 0; t < s.weather.size(); ++t)
        weather.row({s.speeds.time_ids[t], s.weather[t]});

    save_speed_tensor(s.speeds, dir + "/speeds.csv");

    std::ofstream meta(dir + "/scenario.json");
    meta << to_json(s.params).dump(2) << "\n";
}

inline CityScenario load_scenario(const std::string& dir) {
    CityScenario s;
    {
        std::ifstream meta(dir + "/scenario.json");
        if (!meta) throw std::runtime_error(dir + "/scenario.json: cannot open");
        nlohmann::json j;
        try {
            meta >> j;
        } catch (const std::exception& e) {
            throw std::runtime_error(dir + "/scenario.json: " + std::string(e.what()));
        }
        s.params = city_params_from_json(j);
    }
    s.graph = load_graph(dir + "/edges.csv", dir + "/nodes.csv");
    s.speeds = load_speed_tensor(dir + "/speeds.csv");
    require(s.speeds.n_nodes() == s.graph.n_nodes,
            "load_scenario: speeds column count does not match graph");

    std::unordered_map<std::string, int> node_index, cat_index;
    for (int i = 0; i < s.graph.n_nodes; ++i) node_index[s.graph.node_ids[i]] = i;
    const auto& cats = default_poi_categories();
    for (size_t c = 0; c < cats.size(); ++c) cat_index[cats[c]] = static_cast<int>(c);

    const std::string poi_path = dir + "/poi.csv";
    csv::Table poi = csv::read_file(poi_path);
    s.poi_counts.assign(s.graph.n_nodes, std::vector<long>(cats.size(), 0));
    for (size_t r = 0; r < poi.rows.size(); ++r) {
        const auto& row = poi.rows[r];
        const std::string where = poi_path + " line " + std::to_string(poi.line_numbers[r]);
        if (row.size() != 3) throw std::runtime_error(where + ": expected 3 fields");
        auto v = node_index.find(row[0]);
        if (v == node_index.end()) throw std::runtime_error(where + ": unknown node id");
        auto c = cat_index.find(row[1]);
        if (c == cat_index.end()) throw std::runtime_error(where + ": unknown category");
        s.poi_counts[v->second][c->second] = csv::parse_long(row[2], where);
    }

    const std::string weather_path = dir + "/weather.csv";
    csv::Table weather = csv::read_file(weather_path);
    if (weather.rows.size() != s.speeds.time_ids.size())
        throw std::runtime_error(weather_path + ": expected one row per speed step");
    s.weather.reserve(weather.rows.size());
    for (size_t r = 0; r < weather.rows.size(); ++r) {
        const auto& row = weather.rows[r];
        const std::string where =
            weather_path + " line " + std::to_string(weather.line_numbers[r]);
        if (row.size() != 2) throw std::runtime_error(where + ": expected 2 fields");
        if (row[0] != s.speeds.time_ids[r])
            throw std::runtime_error(where + ": time id does not match speeds");
        s.weather.push_back(row[1]);
    }
    return s;
}

}  // namespace kstgcn
