#pragma once

#include "kstgcn/embedding.hpp"
#include "kstgcn/synth.hpp"
#include "kstgcn/trainer.hpp"

#include <atomic>
#include <cstdio>
#include <filesystem>
#include <future>
#include <map>
#include <mutex>
#include <thread>

namespace kstgcn {

// ---------------------------------------------------------------------------
// Configuration

// Either a scenario directory on disk or generation parameters; generated
// scenarios take their seed from the experiment seed list.
struct ScenarioSource {
    std::string path;
    CityParams params;
    bool from_path() const { return !path.empty(); }
};

struct ExperimentConfig {
    ScenarioSource scenario;
    CkgConfig ckg;
    KrearConfig embedding;
    ModelConfig model;
    TrainConfig train_cfg;
    std::string mode = "ablate";
    std::vector<uint64_t> seeds{1, 2, 3};
    int jobs = 1;
    // Extra rows for the historical-average and no-graph baselines.
    bool include_baselines = false;
    // When set, noise cells perturb training targets along with the inputs;
    // validation rows stay clean either way.
    bool perturb_targets = false;
    std::vector<int> horizons{1, 2, 3, 4};
    std::vector<int> hidden_grid{18, 32, 64, 128, 256};
    std::vector<int> dim_grid{5, 10, 15, 20, 30};
    std::vector<double> gaussian_grid{0.2, 0.4, 0.6, 0.8, 1.0, 2.0};
    std::vector<double> poisson_grid{1, 2, 4, 8, 16};
};

inline void validate(const ExperimentConfig& c) {
    require(c.mode == "ablate" || c.mode == "horizon" || c.mode == "noise" || c.mode == "hparam",
            "experiment: unknown mode '" + c.mode + "'");
    require(!c.seeds.empty(), "experiment: seed list is empty");
    require(c.jobs >= 1, "experiment: jobs must be positive");
    require(!c.horizons.empty() && !c.hidden_grid.empty() && !c.dim_grid.empty() &&
                !c.gaussian_grid.empty() && !c.poisson_grid.empty(),
            "experiment: grids must be nonempty");
    for (int h : c.horizons) require(h >= 1, "experiment: horizons must be positive");
    for (int g : c.hidden_grid) require(g >= 1, "experiment: hidden grid must be positive");
    for (int g : c.dim_grid) require(g >= 1, "experiment: dim grid must be positive");
    for (double s : c.gaussian_grid) require(s > 0.0, "experiment: gaussian grid must be positive");
    for (double l : c.poisson_grid) require(l > 0.0, "experiment: poisson grid must be positive");
}

inline nlohmann::json to_json(const KrearConfig& c) {
    return {{"dim", c.dim},       {"scorer", to_string(c.scorer)},
            {"norm", to_string(c.norm)}, {"negatives", c.negatives},
            {"epochs", c.epochs}, {"batch", c.batch},
            {"lr", c.lr},         {"b1", c.b1},
            {"b2", c.b2},         {"seed", c.seed},
            {"cooc_reg_weight", c.cooc_reg_weight}};
}

inline KrearConfig krear_config_from_json(const nlohmann::json& j) {
    KrearConfig c;
    c.dim = j.value("dim", c.dim);
    c.scorer = scorer_from_string(j.value("scorer", to_string(c.scorer)));
    c.norm = norm_from_string(j.value("norm", to_string(c.norm)));
    c.negatives = j.value("negatives", c.negatives);
    c.epochs = j.value("epochs", c.epochs);
    c.batch = j.value("batch", c.batch);
    c.lr = j.value("lr", c.lr);
    c.b1 = j.value("b1", c.b1);
    c.b2 = j.value("b2", c.b2);
    c.seed = j.value("seed", c.seed);
    c.cooc_reg_weight = j.value("cooc_reg_weight", c.cooc_reg_weight);
    return c;
}

inline nlohmann::json to_json(const TrainConfig& c) {
    return {{"lr", c.lr},
            {"batch_size", c.batch_size},
            {"epochs", c.epochs},
            {"train_fraction", c.train_fraction},
            {"seed", c.seed},
            {"weight_decay", c.weight_decay},
            {"window", c.window},
            {"horizon", c.horizon}};
}

inline TrainConfig train_config_from_json(const nlohmann::json& j) {
    TrainConfig c;
    c.lr = j.value("lr", c.lr);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.epochs = j.value("epochs", c.epochs);
    c.train_fraction = j.value("train_fraction", c.train_fraction);
    c.seed = j.value("seed", c.seed);
    c.weight_decay = j.value("weight_decay", c.weight_decay);
    c.window = j.value("window", c.window);
    c.horizon = j.value("horizon", c.horizon);
    return c;
}

// Category and class lists keep their defaults; only the structural knobs are
// exposed through configuration.
inline nlohmann::json to_json(const CkgConfig& c) {
    return {{"link_stride", c.link_stride},
            {"day_steps", c.day_steps},
            {"second_hop", c.second_hop}};
}

inline CkgConfig ckg_config_from_json(const nlohmann::json& j) {
    CkgConfig c;
    c.link_stride = j.value("link_stride", c.link_stride);
    c.day_steps = j.value("day_steps", c.day_steps);
    c.second_hop = j.value("second_hop", c.second_hop);
    return c;
}

inline nlohmann::json to_json(const ScenarioSource& s) {
    if (s.from_path()) return {{"path", s.path}};
    return {{"params", to_json(s.params)}};
}

inline ScenarioSource scenario_source_from_json(const nlohmann::json& j) {
    ScenarioSource s;
    s.path = j.value("path", std::string());
    if (j.contains("params")) s.params = city_params_from_json(j.at("params"));
    return s;
}

inline nlohmann::json to_json(const ExperimentConfig& c) {
    return {{"scenario", to_json(c.scenario)},
            {"ckg", to_json(c.ckg)},
            {"embedding", to_json(c.embedding)},
            {"model", to_json(c.model)},
            {"train", to_json(c.train_cfg)},
            {"mode", c.mode},
            {"seeds", c.seeds},
            {"jobs", c.jobs},
            {"include_baselines", c.include_baselines},
            {"perturb_targets", c.perturb_targets},
            {"horizons", c.horizons},
            {"hidden_grid", c.hidden_grid},
            {"dim_grid", c.dim_grid},
            {"gaussian_grid", c.gaussian_grid},
            {"poisson_grid", c.poisson_grid}};
}

inline ExperimentConfig experiment_config_from_json(const nlohmann::json& j) {
    ExperimentConfig c;
    if (j.contains("scenario")) c.scenario = scenario_source_from_json(j.at("scenario"));
    if (j.contains("ckg")) c.ckg = ckg_config_from_json(j.at("ckg"));
    if (j.contains("embedding")) c.embedding = krear_config_from_json(j.at("embedding"));
    if (j.contains("model")) c.model = model_config_from_json(j.at("model"));
    if (j.contains("train")) c.train_cfg = train_config_from_json(j.at("train"));
    c.mode = j.value("mode", c.mode);
    if (j.contains("seeds")) c.seeds = j.at("seeds").get<std::vector<uint64_t>>();
    c.jobs = j.value("jobs", c.jobs);
    c.include_baselines = j.value("include_baselines", c.include_baselines);
    c.perturb_targets = j.value("perturb_targets", c.perturb_targets);
    if (j.contains("horizons")) c.horizons = j.at("horizons").get<std::vector<int>>();
    if (j.contains("hidden_grid")) c.hidden_grid = j.at("hidden_grid").get<std::vector<int>>();
    if (j.contains("dim_grid")) c.dim_grid = j.at("dim_grid").get<std::vector<int>>();
    if (j.contains("gaussian_grid"))
        c.gaussian_grid = j.at("gaussian_grid").get<std::vector<double>>();
    if (j.contains("poisson_grid"))
        c.poisson_grid = j.at("poisson_grid").get<std::vector<double>>();
    return c;
}

// ---------------------------------------------------------------------------
// Sweep cells

// One grid point of a sweep. Knowledge widths are derived from the embedding
// dimension, so the base model config's d_s/d_d are ignored here.
struct SweepCell {
    std::string name;
    bool historical_average = false;
    bool graphless = false;  // identity propagation (no spatial mixing)
    bool use_static = true;
    bool use_dynamic = true;
    int horizon = 0;  // 0 = inherit from the base config
    int hidden = 0;
    int dim = 0;
    double gaussian_sigma = 0.0;  // exactly one of these is set for noise cells
    double poisson_lambda = 0.0;
};

namespace detail {

inline std::string grid_label(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
}

}  // namespace detail

inline std::vector<SweepCell> sweep_cells(const ExperimentConfig& cfg) {
    std::vector<SweepCell> cells;
    auto add = [&cells](const std::string& name) -> SweepCell& {
        cells.push_back({});
        cells.back().name = name;
        return cells.back();
    };
    if (cfg.mode == "ablate") {
        if (cfg.include_baselines) {
            SweepCell& ha = add("ha");
            ha.historical_average = true;
            SweepCell& gru = add("gru_only");
            gru.graphless = true;
            gru.use_static = gru.use_dynamic = false;
        }
        SweepCell& none = add("none");
        none.use_static = none.use_dynamic = false;
        add("static_only").use_dynamic = false;
        add("dynamic_only").use_static = false;
        add("both");
    } else if (cfg.mode == "horizon") {
        for (int h : cfg.horizons) add("horizon_" + std::to_string(h)).horizon = h;
    } else if (cfg.mode == "noise") {
        add("clean");
        for (double s : cfg.gaussian_grid)
            add("gaussian_" + detail::grid_label(s)).gaussian_sigma = s;
        for (double l : cfg.poisson_grid)
            add("poisson_" + detail::grid_label(l)).poisson_lambda = l;
    } else {
        for (int g : cfg.hidden_grid) add("hidden_" + std::to_string(g)).hidden = g;
        for (int g : cfg.dim_grid) add("dim_" + std::to_string(g)).dim = g;
    }
    return cells;
}

// ---------------------------------------------------------------------------
// Shared pipeline stages

namespace detail {

inline std::string content_key(const std::string& s) {
    uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char buf[24];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

// Builds each keyed value once even under concurrent requests; later callers
// wait on the first builder's future (and share its exception, if any).
template <class T>
class KeyedOnce {
public:
    std::shared_ptr<const T> get(const std::string& key,
                                 const std::function<std::shared_ptr<const T>()>& build) {
        std::shared_future<std::shared_ptr<const T>> fut;
        std::promise<std::shared_ptr<const T>> prom;
        bool builder = false;
        {
            std::lock_guard<std::mutex> lock(mu_);
            auto it = map_.find(key);
            if (it == map_.end()) {
                fut = prom.get_future().share();
                map_.emplace(key, fut);
                builder = true;
            } else {
                fut = it->second;
            }
        }
        if (builder) {
            try {
                prom.set_value(build());
            } catch (...) {
                prom.set_exception(std::current_exception());
            }
        }
        return fut.get();
    }

private:
    std::mutex mu_;
    std::map<std::string, std::shared_future<std::shared_ptr<const T>>> map_;
};

struct StageCaches {
    std::filesystem::path cache_dir;
    KeyedOnce<CityScenario> scenarios;
    KeyedOnce<KnowledgeVectors> vectors;
};

inline std::pair<std::string, std::shared_ptr<const CityScenario>> get_scenario(
    const ExperimentConfig& cfg, uint64_t seed, StageCaches& caches) {
    std::string key;
    std::function<std::shared_ptr<const CityScenario>()> build;
    if (cfg.scenario.from_path()) {
        key = "path:" + cfg.scenario.path;
        const std::string path = cfg.scenario.path;
        build = [path] { return std::make_shared<const CityScenario>(load_scenario(path)); };
    } else {
        CityParams p = cfg.scenario.params;
        p.seed = seed;
        key = "gen:" + to_json(p).dump();
        const std::filesystem::path dir = caches.cache_dir / ("scenario_" + content_key(key));
        build = [p, dir] {
            if (std::filesystem::exists(dir / "scenario.json"))
                return std::make_shared<const CityScenario>(load_scenario(dir.string()));
            auto s = std::make_shared<const CityScenario>(generate_city(p));
            save_scenario(*s, dir.string());
            return s;
        };
    }
    return {key, caches.scenarios.get(key, build)};
}

inline std::shared_ptr<const KnowledgeVectors> get_vectors(const ExperimentConfig& cfg,
                                                           uint64_t seed, int dim,
                                                           const std::string& scenario_key,
                                                           const CityScenario& s,
                                                           StageCaches& caches) {
    KrearConfig kc = cfg.embedding;
    kc.dim = dim;
    kc.seed = seed;
    const nlohmann::json key_doc = {
        {"embedding", to_json(kc)}, {"ckg", to_json(cfg.ckg)}, {"scenario", scenario_key}};
    const std::string key = key_doc.dump();
    const std::filesystem::path dir = caches.cache_dir / ("embed_" + content_key(key));
    auto build = [&cfg, kc, dir, &s] {
        TripleStore store =
            build_ckg(s.graph, s.poi_counts, s.weather, s.speeds.time_ids, cfg.ckg);
        EmbeddingTable table = std::filesystem::exists(dir / "meta.json")
                                   ? load_embedding_table(dir.string())
                                   : train_krear(store, kc);
        if (!std::filesystem::exists(dir / "meta.json")) save_embedding_table(table, dir.string());
        return std::make_shared<const KnowledgeVectors>(
            extract_knowledge_vectors(table, store, s.speeds.time_ids));
    };
    return caches.vectors.get(key, build);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Baselines and single-cell evaluation

// Same time-of-day training mean per node, evaluated over the validation
// target rows. The day length comes from the recording interval.
inline MetricReport historical_average_report(const SpeedTensor& data, double train_fraction,
                                              int window) {
    validate(data);
    const int total = data.n_steps(), n = data.n_nodes();
    require(data.interval_minutes > 0 && 1440 % data.interval_minutes == 0,
            "historical average: interval must divide a day");
    const int day = 1440 / data.interval_minutes;
    const int split = chronological_split(total, train_fraction);
    require(split > 0 && split + window < total, "historical average: degenerate split");

    Mat slot_sum = Mat::Zero(day, n);
    std::vector<int> slot_count(day, 0);
    for (int t = 0; t < split; ++t) {
        slot_sum.row(t % day) += data.values.row(t);
        ++slot_count[t % day];
    }
    const Vec overall = data.values.topRows(split).colwise().mean().transpose();
    const int count = total - (split + window);
    Mat pred(n, count), truth(n, count);
    for (int t = split + window; t < total; ++t) {
        const int slot = t % day;
        const int col = t - (split + window);
        pred.col(col) = slot_count[slot] > 0
                            ? Vec(slot_sum.row(slot).transpose() / slot_count[slot])
                            : overall;
        truth.col(col) = data.values.row(t).transpose();
    }
    return evaluate(pred, truth);
}

// Validation metrics for an already-trained model, using the same split,
// normalization, and window pooling as the trainer.
inline MetricReport validation_report(const ForecastModel& model, const SpeedTensor& data,
                                      const Mat& e_s, const Mat& e_d, const PropagationMatrix& p,
                                      double train_fraction) {
    validate(data);
    const int total = data.n_steps();
    const int window = model.config.window, horizon = model.config.horizon;
    const int split = chronological_split(total, train_fraction);
    require(split > window + horizon && split + window + horizon <= total,
            "validation_report: degenerate split");
    const NormBounds b = speed_bounds(data, split);
    Mat norm = ((data.values.array() - b.lo) / (b.hi - b.lo)).matrix();
    std::vector<int> starts;
    for (int s = split; s + window + horizon <= total; ++s) starts.push_back(s);
    auto [pred, truth] = predict_windows(model, norm, e_s, e_d, p, starts, b);
    return evaluate(pred, truth);
}

namespace detail {

inline MetricReport run_cell(const ExperimentConfig& cfg, const SweepCell& cell, uint64_t seed,
                             StageCaches& caches) {
    auto [scenario_key, scenario] = get_scenario(cfg, seed, caches);
    const SpeedTensor& speeds = scenario->speeds;
    const int n = speeds.n_nodes(), total = speeds.n_steps();

    TrainConfig tc = cfg.train_cfg;
    tc.seed = seed;
    if (cell.historical_average) {
        const int window = tc.window > 0 ? tc.window : cfg.model.window;
        return historical_average_report(speeds, tc.train_fraction, window);
    }

    ModelConfig mc = cfg.model;
    if (cell.horizon > 0) mc.horizon = cell.horizon;
    if (cell.hidden > 0) mc.d_h = cell.hidden;
    const int dim = cell.dim > 0 ? cell.dim : cfg.embedding.dim;
    mc.d_s = cell.use_static ? dim : 0;
    mc.d_d = cell.use_dynamic ? dim : 0;

    Mat e_s(n, 0), e_d(0, 0);
    if (mc.d_s > 0 || mc.d_d > 0) {
        auto vectors = get_vectors(cfg, seed, dim, scenario_key, *scenario, caches);
        if (mc.d_s > 0) e_s = vectors->e_s;
        if (mc.d_d > 0) e_d = vectors->e_d;
    }
    const PropagationMatrix p = cell.graphless
                                    ? PropagationMatrix{Mat::Identity(n, n)}
                                    : propagation_matrix(scenario->graph);

    Rng init_rng(seed);
    ForecastModel model = init_forecast_model(mc, init_rng);

    const bool noisy = cell.gaussian_sigma > 0.0 || cell.poisson_lambda > 0.0;
    if (!noisy) {
        TrainHistory h = train(model, speeds, e_s, e_d, p, tc);
        return h.epochs.back().val;
    }

    // Perturb only the training rows; validation inputs and targets stay clean.
    SpeedTensor perturbed = cell.gaussian_sigma > 0.0
                                ? perturb(speeds, GaussianNoise{cell.gaussian_sigma}, seed)
                                : perturb(speeds, PoissonNoise{cell.poisson_lambda}, seed);
    const int split = chronological_split(total, tc.train_fraction);
    perturbed.values.bottomRows(total - split) = speeds.values.bottomRows(total - split);
    TrainHistory h = cfg.perturb_targets ? train(model, perturbed, e_s, e_d, p, tc)
                                         : train(model, speeds, e_s, e_d, p, tc, &perturbed);
    return h.epochs.back().val;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Orchestration

struct ResultRow {
    std::string cell;
    uint64_t seed = 0;
    MetricReport report;
    bool ok = false;
    std::string error;
};

namespace detail {

inline std::string median_cell(std::vector<double> v) {
    if (v.empty()) return "*";
    std::sort(v.begin(), v.end());
    const size_t m = v.size() / 2;
    const double med = v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
    return csv::format_metric(med);
}

inline void write_results(const std::vector<ResultRow>& rows, const std::string& path) {
    csv::Writer w(path);
    std::vector<std::string> header{"cell", "seed"};
    for (const std::string& c : metric_columns()) header.push_back(c);
    w.row(header);
    for (const ResultRow& r : rows) {
        if (!r.ok) continue;
        std::vector<std::string> fields{r.cell, std::to_string(r.seed)};
        for (const std::string& c : metric_cells(r.report)) fields.push_back(c);
        w.row(fields);
    }
}

inline void write_summary(const std::vector<SweepCell>& cells, const std::vector<ResultRow>& rows,
                          const std::string& path) {
    csv::Writer w(path);
    std::vector<std::string> header{"cell"};
    for (const std::string& c : metric_columns()) header.push_back(c);
    w.row(header);
    for (const SweepCell& cell : cells) {
        std::vector<double> rmse, mae, acc, r2, var;
        for (const ResultRow& r : rows) {
            if (!r.ok || r.cell != cell.name) continue;
            rmse.push_back(r.report.rmse);
            mae.push_back(r.report.mae);
            acc.push_back(r.report.accuracy);
            if (r.report.r2) r2.push_back(*r.report.r2);
            if (r.report.var) var.push_back(*r.report.var);
        }
        w.row({cell.name, median_cell(rmse), median_cell(mae), median_cell(acc),
               median_cell(r2), median_cell(var)});
    }
}

}  // namespace detail

// Runs every (cell, seed) task, writes results.csv / summary.csv /
// run_config.json under `out`, and returns the count of failed tasks. On any
// failure error.log lists one line per failed task; completed rows are kept.
inline int run_experiment(const ExperimentConfig& cfg, const std::string& out) {
    validate(cfg);
    const std::filesystem::path out_dir(out);
    std::filesystem::create_directories(out_dir);
    detail::StageCaches caches;
    caches.cache_dir = out_dir / "cache";
    std::filesystem::create_directories(caches.cache_dir);

    const std::vector<SweepCell> cells = sweep_cells(cfg);
    std::vector<ResultRow> rows;
    for (uint64_t seed : cfg.seeds)
        for (const SweepCell& cell : cells) rows.push_back({cell.name, seed, {}, false, ""});

    std::atomic<size_t> next{0};
    auto worker = [&] {
        for (;;) {
            const size_t i = next.fetch_add(1);
            if (i >= rows.size()) return;
            const SweepCell& cell = cells[i % cells.size()];
            try {
                rows[i].report = detail::run_cell(cfg, cell, rows[i].seed, caches);
                rows[i].ok = true;
            } catch (const std::exception& e) {
                rows[i].error = e.what();
            }
        }
    };
    const int thread_count = std::min<size_t>(cfg.jobs, rows.size());
    std::vector<std::thread> pool;
    for (int i = 1; i < thread_count; ++i) pool.emplace_back(worker);
    worker();
    for (std::thread& t : pool) t.join();

    {
        std::ofstream echo(out_dir / "run_config.json");
        echo << to_json(cfg).dump(2) << '\n';
    }
    detail::write_results(rows, (out_dir / "results.csv").string());

    int failures = 0;
    for (const ResultRow& r : rows)
        if (!r.ok) ++failures;
    if (failures > 0) {
        std::ofstream log(out_dir / "error.log");
        for (const ResultRow& r : rows)
            if (!r.ok) log << "cell=" << r.cell << " seed=" << r.seed << ": " << r.error << '\n';
        return failures;
    }
    detail::write_summary(cells, rows, (out_dir / "summary.csv").string());
    return 0;
}

// ---------------------------------------------------------------------------
// Plot data export

// Rewrites results.csv into one long-format file per sweep family
// (x, metric, value, seed); the x column is the grid value, or the cell name
// for categorical sweeps. The clean noise row lands in both noise files at 0.
inline std::vector<std::string> export_plotdata(const std::string& results_dir) {
    const std::filesystem::path dir(results_dir);
    const std::filesystem::path results = dir / "results.csv";
    require(std::filesystem::exists(results), "export_plotdata: missing " + results.string());
    csv::Table table = csv::read_file(results.string());
    require(!table.rows.empty(), "export_plotdata: no result rows in " + results.string());
    require(table.header.size() >= 2 + metric_columns().size(),
            "export_plotdata: unexpected results header");

    struct Entry {
        std::string x, metric, value, seed;
    };
    std::map<std::string, std::vector<Entry>> groups;
    auto push = [&groups](const std::string& group, const std::string& x,
                          const std::vector<std::string>& row) {
        const std::vector<std::string>& names = metric_columns();
        for (size_t k = 0; k < names.size(); ++k) {
            const std::string& value = row[2 + k];
            if (value == "*") continue;
            groups[group].push_back({x, names[k], value, row[1]});
        }
    };
    auto suffix_after = [](const std::string& s, const std::string& prefix) {
        return s.substr(prefix.size());
    };
    for (const std::vector<std::string>& row : table.rows) {
        const std::string& cell = row[0];
        if (cell.starts_with("horizon_")) push("horizon", suffix_after(cell, "horizon_"), row);
        else if (cell.starts_with("hidden_")) push("hidden", suffix_after(cell, "hidden_"), row);
        else if (cell.starts_with("dim_")) push("dim", suffix_after(cell, "dim_"), row);
        else if (cell.starts_with("gaussian_"))
            push("noise_gaussian", suffix_after(cell, "gaussian_"), row);
        else if (cell.starts_with("poisson_"))
            push("noise_poisson", suffix_after(cell, "poisson_"), row);
        else if (cell == "clean") {
            push("noise_gaussian", "0", row);
            push("noise_poisson", "0", row);
        } else {
            push("ablate", cell, row);
        }
    }

    std::vector<std::string> written;
    for (const auto& [group, entries] : groups) {
        const std::string path = (dir / ("plot_" + group + ".csv")).string();
        csv::Writer w(path);
        w.row({"x", "metric", "value", "seed"});
        for (const Entry& e : entries) w.row({e.x, e.metric, e.value, e.seed});
        written.push_back(path);
    }
    return written;
}

}  // namespace kstgcn
