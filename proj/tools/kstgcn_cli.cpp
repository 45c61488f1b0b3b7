// Command-line front end: single pipeline stages plus sweep orchestration.
// Every command reads one JSON config and writes its artifacts under --out.

#include "kstgcn/experiment.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

namespace {

using namespace kstgcn;
namespace fs = std::filesystem;

nlohmann::json read_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read config " + path);
    nlohmann::json j;
    in >> j;
    return j;
}

CityScenario resolve_scenario(const ScenarioSource& source) {
    if (source.from_path()) return load_scenario(source.path);
    return generate_city(source.params);
}

std::vector<uint64_t> parse_seed_list(const std::string& text) {
    std::vector<uint64_t> seeds;
    for (const std::string& part : csv::split_line(text))
        seeds.push_back(static_cast<uint64_t>(csv::parse_long(part, "seed list")));
    return seeds;
}

void write_metrics_file(const MetricReport& report, const std::string& path) {
    csv::Writer w(path);
    w.row(metric_columns());
    w.row(metric_cells(report));
}

int cmd_synth(const std::string& config_path, const std::string& out) {
    CityParams params;
    if (!config_path.empty()) params = city_params_from_json(read_config(config_path));
    CityScenario s = generate_city(params);
    save_scenario(s, out);
    std::cout << "scenario: " << s.graph.n_nodes << " nodes, " << s.speeds.n_steps()
              << " steps -> " << out << "\n";
    return 0;
}

int cmd_build_kg(const std::string& config_path, const std::string& out) {
    nlohmann::json j = read_config(config_path);
    require(j.contains("scenario"), "build-kg: config needs a scenario");
    ScenarioSource source = scenario_source_from_json(j.at("scenario"));
    CkgConfig ckg = j.contains("ckg") ? ckg_config_from_json(j.at("ckg")) : CkgConfig{};
    CityScenario s = resolve_scenario(source);
    TripleStore store = build_ckg(s.graph, s.poi_counts, s.weather, s.speeds.time_ids, ckg);
    save_triple_store(store, out);
    std::cout << "knowledge graph: " << store.relations().size() << " relation triples, "
              << store.attributes().size() << " attribute triples -> " << out << "\n";
    return 0;
}

int cmd_embed(const std::string& config_path, const std::string& out) {
    nlohmann::json j = read_config(config_path);
    require(j.contains("kg"), "embed: config needs a kg directory path");
    TripleStore store = load_triple_store(j.at("kg").get<std::string>());
    KrearConfig kc =
        j.contains("embedding") ? krear_config_from_json(j.at("embedding")) : KrearConfig{};
    EmbeddingTable table = train_krear(store, kc);
    save_embedding_table(table, out);
    std::cout << "embedding: dim " << kc.dim << ", mean tail rank "
              << mean_tail_rank(table, store) << " -> " << out << "\n";
    return 0;
}

int cmd_train(const std::string& config_path, const std::string& out) {
    ExperimentConfig cfg = experiment_config_from_json(read_config(config_path));
    CityScenario s = resolve_scenario(cfg.scenario);
    const int n = s.speeds.n_nodes();

    ModelConfig mc = cfg.model;
    // Knowledge widths come from the embedding dimension.
    if (mc.d_s > 0) mc.d_s = cfg.embedding.dim;
    if (mc.d_d > 0) mc.d_d = cfg.embedding.dim;
    fs::create_directories(out);
    Mat e_s(n, 0), e_d(0, 0);
    if (mc.d_s > 0 || mc.d_d > 0) {
        TripleStore store = build_ckg(s.graph, s.poi_counts, s.weather, s.speeds.time_ids, cfg.ckg);
        EmbeddingTable table = train_krear(store, cfg.embedding);
        save_embedding_table(table, (fs::path(out) / "embedding").string());
        KnowledgeVectors kv = extract_knowledge_vectors(table, store, s.speeds.time_ids);
        if (mc.d_s > 0) e_s = kv.e_s;
        if (mc.d_d > 0) e_d = kv.e_d;
    }
    PropagationMatrix p = propagation_matrix(s.graph);
    Rng rng(cfg.train_cfg.seed);
    ForecastModel model = init_forecast_model(mc, rng);
    TrainHistory h = train(model, s.speeds, e_s, e_d, p, cfg.train_cfg);

    save_forecast_model(model, (fs::path(out) / "model").string());
    save_history(h, (fs::path(out) / "history.csv").string());
    write_metrics_file(h.epochs.back().val, (fs::path(out) / "metrics.csv").string());
    std::cout << "validation rmse " << csv::format_metric(h.epochs.back().val.rmse) << " -> "
              << out << "\n";
    return 0;
}

int cmd_eval(const std::string& config_path, const std::string& out) {
    nlohmann::json j = read_config(config_path);
    require(j.contains("scenario"), "eval: config needs a scenario");
    require(j.contains("model"), "eval: config needs a model directory");
    CityScenario s = resolve_scenario(scenario_source_from_json(j.at("scenario")));
    ForecastModel model = load_forecast_model(j.at("model").get<std::string>());
    const int n = s.speeds.n_nodes();
    const double train_fraction = j.value("train_fraction", 0.8);

    Mat e_s(n, 0), e_d(0, 0);
    if (model.config.d_s > 0 || model.config.d_d > 0) {
        require(j.contains("embedding"), "eval: model uses knowledge; config needs an embedding directory");
        EmbeddingTable table = load_embedding_table(j.at("embedding").get<std::string>());
        CkgConfig ckg = j.contains("ckg") ? ckg_config_from_json(j.at("ckg")) : CkgConfig{};
        TripleStore store = build_ckg(s.graph, s.poi_counts, s.weather, s.speeds.time_ids, ckg);
        KnowledgeVectors kv = extract_knowledge_vectors(table, store, s.speeds.time_ids);
        if (model.config.d_s > 0) e_s = kv.e_s;
        if (model.config.d_d > 0) e_d = kv.e_d;
    }
    PropagationMatrix p = propagation_matrix(s.graph);
    MetricReport report = validation_report(model, s.speeds, e_s, e_d, p, train_fraction);

    fs::create_directories(out);
    write_metrics_file(report, (fs::path(out) / "metrics.csv").string());
    for (size_t i = 0; i < metric_columns().size(); ++i)
        std::cout << metric_columns()[i] << " " << metric_cells(report)[i] << "\n";
    return 0;
}

int cmd_sweep(const std::string& config_path, const std::string& out, const std::string& seeds,
              const std::string& mode, int jobs) {
    ExperimentConfig cfg = experiment_config_from_json(read_config(config_path));
    if (!seeds.empty()) cfg.seeds = parse_seed_list(seeds);
    if (!mode.empty()) cfg.mode = mode;
    if (jobs > 0) cfg.jobs = jobs;
    const int failures = run_experiment(cfg, out);
    if (failures > 0) {
        std::cerr << failures << " task(s) failed; see " << (fs::path(out) / "error.log").string()
                  << "\n";
        return 1;
    }
    for (const std::string& f : export_plotdata(out)) std::cout << "wrote " << f << "\n";
    std::cout << "wrote " << (fs::path(out) / "summary.csv").string() << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"knowledge-assisted traffic forecasting pipeline"};
    app.require_subcommand(1);

    std::string config_path, out = "out", seeds, mode;
    int jobs = 0;

    CLI::App* synth = app.add_subcommand("synth", "generate a synthetic city scenario");
    synth->add_option("--config", config_path, "generation parameters (JSON)");
    synth->add_option("--out", out, "scenario output directory");

    CLI::App* build_kg = app.add_subcommand("build-kg", "build the knowledge graph for a scenario");
    build_kg->add_option("--config", config_path, "config with scenario + ckg settings")->required();
    build_kg->add_option("--out", out, "triple store output directory");

    CLI::App* embed = app.add_subcommand("embed", "train knowledge embeddings on a triple store");
    embed->add_option("--config", config_path, "config with kg path + embedding settings")->required();
    embed->add_option("--out", out, "embedding table output directory");

    CLI::App* train = app.add_subcommand("train", "train a forecasting model end to end");
    train->add_option("--config", config_path, "full pipeline config (JSON)")->required();
    train->add_option("--out", out, "model + history output directory");

    CLI::App* eval = app.add_subcommand("eval", "evaluate a saved model on a scenario");
    eval->add_option("--config", config_path, "config with scenario + model paths")->required();
    eval->add_option("--out", out, "metrics output directory");

    CLI::App* sweep = app.add_subcommand("sweep", "run an experiment grid and summarize it");
    sweep->add_option("--config", config_path, "experiment config (JSON)")->required();
    sweep->add_option("--out", out, "experiment output directory");
    sweep->add_option("--seeds", seeds, "comma-separated seed list (overrides config)");
    sweep->add_option("--mode", mode, "ablate|horizon|noise|hparam (overrides config)");
    sweep->add_option("--jobs", jobs, "parallel worker count (overrides config)");

    CLI11_PARSE(app, argc, argv);
    try {
        if (synth->parsed()) return cmd_synth(config_path, out);
        if (build_kg->parsed()) return cmd_build_kg(config_path, out);
        if (embed->parsed()) return cmd_embed(config_path, out);
        if (train->parsed()) return cmd_train(config_path, out);
        if (eval->parsed()) return cmd_eval(config_path, out);
        if (sweep->parsed()) return cmd_sweep(config_path, out, seeds, mode, jobs);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
