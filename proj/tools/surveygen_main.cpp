#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "surveygen/corpus.hpp"
#include "surveygen/embedding.hpp"
#include "surveygen/errors.hpp"
#include "surveygen/eval.hpp"
#include "surveygen/index.hpp"
#include "surveygen/pipeline.hpp"
#include "surveygen/util.hpp"

namespace {

using json = nlohmann::json;
using namespace surveygen;

json load_json_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw ParseError(path + ": " + e.what());
    }
    return j;
}

ProviderConfig provider_from_json(const json& j, ProviderConfig base) {
    if (j.contains("endpoint")) base.endpoint = j.at("endpoint").get<std::string>();
    if (j.contains("model")) base.model = j.at("model").get<std::string>();
    if (j.contains("embed_model")) base.embed_model = j.at("embed_model").get<std::string>();
    if (j.contains("api_key")) base.api_key = j.at("api_key").get<std::string>();
    if (j.contains("name")) base.name = j.at("name").get<std::string>();
    if (j.contains("max_concurrency")) base.max_concurrency = j.at("max_concurrency").get<int>();
    if (j.contains("retry")) {
        const json& r = j.at("retry");
        if (r.contains("max_attempts")) base.retry.max_attempts = r.at("max_attempts").get<int>();
        if (r.contains("base_backoff_seconds")) {
            base.retry.base_backoff_seconds = r.at("base_backoff_seconds").get<double>();
        }
        if (r.contains("max_backoff_seconds")) {
            base.retry.max_backoff_seconds = r.at("max_backoff_seconds").get<double>();
        }
    }
    if (j.contains("price")) {
        const json& p = j.at("price");
        if (p.contains("per_1k_input")) base.price.per_1k_input = p.at("per_1k_input").get<double>();
        if (p.contains("per_1k_output")) {
            base.price.per_1k_output = p.at("per_1k_output").get<double>();
        }
    }
    return base;
}

void apply_config_file(RunConfig& cfg, const std::string& path) {
    const json j = load_json_file(path);
    if (j.contains("topic")) cfg.topic = j.at("topic").get<std::string>();
    if (j.contains("corpus")) cfg.corpus_path = j.at("corpus").get<std::string>();
    if (j.contains("index")) cfg.index_path = j.at("index").get<std::string>();
    if (j.contains("provider")) cfg.provider = j.at("provider").get<std::string>();
    if (j.contains("writer")) cfg.writer = provider_from_json(j.at("writer"), cfg.writer);
    if (j.contains("judges")) {
        cfg.judges.clear();
        for (const json& entry : j.at("judges")) {
            cfg.judges.push_back(provider_from_json(entry, ProviderConfig{}));
        }
    }
    if (j.contains("embed_dim")) cfg.embed_dim = j.at("embed_dim").get<std::size_t>();
    if (j.contains("n")) cfg.n_trials = j.at("n").get<int>();
    if (j.contains("sections")) cfg.section_count = j.at("sections").get<int>();
    if (j.contains("window_budget")) cfg.window_budget = j.at("window_budget").get<std::int64_t>();
    if (j.contains("k_init")) cfg.k_init = j.at("k_init").get<int>();
    if (j.contains("k_sub")) cfg.k_sub = j.at("k_sub").get<int>();
    if (j.contains("body_budget")) cfg.body_budget = j.at("body_budget").get<std::int64_t>();
    if (j.contains("word_target")) cfg.word_target = j.at("word_target").get<int>();
    if (j.contains("temperature")) cfg.temperature = j.at("temperature").get<double>();
    if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("resolve_threshold")) {
        cfg.resolve_threshold = j.at("resolve_threshold").get<float>();
    }
    if (j.contains("exclusions")) {
        cfg.exclusions = j.at("exclusions").get<std::vector<std::string>>();
    }
    if (j.contains("length_target")) cfg.length_target = j.at("length_target").get<std::int64_t>();
    if (j.contains("output_dir")) cfg.output_dir = j.at("output_dir").get<std::string>();
    if (j.contains("templates_dir")) {
        cfg.templates_dir = std::filesystem::path(j.at("templates_dir").get<std::string>());
    }
}

void apply_env_secrets(RunConfig& cfg) {
    const char* key = std::getenv("SURVEYGEN_API_KEY");
    if (key == nullptr || *key == '\0') return;
    if (cfg.writer.api_key.empty()) cfg.writer.api_key = key;
    for (ProviderConfig& judge : cfg.judges) {
        if (judge.api_key.empty()) judge.api_key = key;
    }
}

struct CommonFlags {
    std::string config_path;
    std::string topic, corpus, index, provider, templates_dir, output_dir;
    std::string model, endpoint;
    int n = 0, sections = 0, k_init = 0, k_sub = 0, word_target = 0;
    std::int64_t window_budget = 0, body_budget = 0, length_target = 0;
    std::uint64_t seed = 0;
    double temperature = 1.0;
    float resolve_threshold = 0.5f;
    std::size_t embed_dim = 0;
    std::vector<std::string> exclusions;
};

void add_common_options(CLI::App* cmd, CommonFlags& f) {
    cmd->add_option("--config", f.config_path, "JSON config file; flags override its fields");
    cmd->add_option("--topic", f.topic, "Survey topic");
    cmd->add_option("--corpus", f.corpus, "JSONL corpus file");
    cmd->add_option("--index", f.index, "Index file (built and saved when missing)");
    cmd->add_option("--provider", f.provider, "Provider kind: mock | http");
    cmd->add_option("--model", f.model, "Writer model name");
    cmd->add_option("--endpoint", f.endpoint, "Provider endpoint, e.g. https://api.openai.com/v1");
    cmd->add_option("--n", f.n, "Number of candidate trials");
    cmd->add_option("--sections", f.sections, "Section count of the final outline");
    cmd->add_option("--seed", f.seed, "RNG seed");
    cmd->add_option("--window-budget", f.window_budget, "Context window token budget");
    cmd->add_option("--k-init", f.k_init, "Initial retrieval pool size");
    cmd->add_option("--k-sub", f.k_sub, "References per subsection");
    cmd->add_option("--body-budget", f.body_budget, "Per-paper body token budget");
    cmd->add_option("--word-target", f.word_target, "Words per subsection");
    cmd->add_option("--temperature", f.temperature, "Sampling temperature");
    cmd->add_option("--resolve-threshold", f.resolve_threshold,
                    "Citation resolution similarity threshold");
    cmd->add_option("--embed-dim", f.embed_dim, "Embedding dimension");
    cmd->add_option("--exclude", f.exclusions, "Paper id to exclude from retrieval (repeatable)");
    cmd->add_option("--out", f.output_dir, "Output directory");
    cmd->add_option("--templates-dir", f.templates_dir, "Prompt template override directory");
}

RunConfig build_config(CLI::App* cmd, const CommonFlags& f) {
    RunConfig cfg;
    if (cmd->count("--config") > 0) apply_config_file(cfg, f.config_path);
    if (cmd->count("--topic") > 0) cfg.topic = f.topic;
    if (cmd->count("--corpus") > 0) cfg.corpus_path = f.corpus;
    if (cmd->count("--index") > 0) cfg.index_path = f.index;
    if (cmd->count("--provider") > 0) cfg.provider = f.provider;
    if (cmd->count("--model") > 0) cfg.writer.model = f.model;
    if (cmd->count("--endpoint") > 0) cfg.writer.endpoint = f.endpoint;
    if (cmd->count("--n") > 0) cfg.n_trials = f.n;
    if (cmd->count("--sections") > 0) cfg.section_count = f.sections;
    if (cmd->count("--seed") > 0) cfg.seed = f.seed;
    if (cmd->count("--window-budget") > 0) cfg.window_budget = f.window_budget;
    if (cmd->count("--k-init") > 0) cfg.k_init = f.k_init;
    if (cmd->count("--k-sub") > 0) cfg.k_sub = f.k_sub;
    if (cmd->count("--body-budget") > 0) cfg.body_budget = f.body_budget;
    if (cmd->count("--word-target") > 0) cfg.word_target = f.word_target;
    if (cmd->count("--temperature") > 0) cfg.temperature = f.temperature;
    if (cmd->count("--resolve-threshold") > 0) cfg.resolve_threshold = f.resolve_threshold;
    if (cmd->count("--embed-dim") > 0) cfg.embed_dim = f.embed_dim;
    if (cmd->count("--exclude") > 0) cfg.exclusions = f.exclusions;
    if (cmd->count("--out") > 0) cfg.output_dir = f.output_dir;
    if (cmd->count("--templates-dir") > 0) cfg.templates_dir = f.templates_dir;
    apply_env_secrets(cfg);
    return cfg;
}

int cmd_generate(CLI::App* cmd, const CommonFlags& f, bool baseline,
                 std::int64_t length_target) {
    RunConfig cfg = build_config(cmd, f);
    if (cmd->count("--length-target") > 0) cfg.length_target = length_target;
    if (cfg.topic.empty()) throw Error("generate: --topic is required");
    if (cfg.corpus_path.empty()) throw Error("generate: --corpus is required");

    const Runtime runtime = make_runtime(cfg);
    const SurveyArtifact artifact = baseline ? run_baseline(cfg, runtime) : run(cfg, runtime);
    std::cout << report(artifact);
    std::cout << "Artifacts: " << artifact.output_directory.string() << "\n";
    return 0;
}

int cmd_index_build(const std::string& corpus_path, const std::string& out_path,
                    std::size_t dim) {
    const Corpus corpus = ingest_jsonl(corpus_path);
    HashEmbedder embedder(dim);
    const VectorIndex index = build_index(corpus, embedder);
    save_index(index, out_path);
    std::cout << "Indexed " << index.size(IndexNamespace::kAbstract) << " records (dim " << dim
              << ") into " << out_path << "\n";
    return 0;
}

int cmd_evaluate(CLI::App* cmd, const CommonFlags& f, const std::string& survey_path,
                 const std::string& report_out) {
    RunConfig cfg = build_config(cmd, f);
    if (cfg.corpus_path.empty()) throw Error("evaluate: --corpus is required");

    const Runtime runtime = make_runtime(cfg);
    const SurveyArtifact artifact = evaluate_survey(cfg, runtime, survey_path);
    std::cout << report(artifact);
    if (!report_out.empty()) {
        std::ofstream out(report_out, std::ios::binary);
        if (!out) throw IoError("cannot write " + report_out);
        out << artifact.report_json;
        std::cout << "Report: " << report_out << "\n";
    }
    return 0;
}

int cmd_meta_eval(const std::vector<std::string>& ranking_files) {
    if (ranking_files.size() != 2) throw Error("meta-eval needs exactly two ranking files");
    std::vector<std::vector<double>> rankings;
    for (const std::string& path : ranking_files) {
        const json j = load_json_file(path);
        if (!j.is_array()) throw ParseError(path + ": expected a JSON array of numbers");
        rankings.push_back(j.get<std::vector<double>>());
    }
    const double rho = spearman_rho(rankings[0], rankings[1]);
    char buf[64];
    std::snprintf(buf, sizeof(buf), "spearman_rho = %.6f\n", rho);
    std::cout << buf;
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Citation-grounded literature survey generation over a local paper corpus"};
    app.require_subcommand(1);

    bool verbose = false;
    app.add_flag("-v,--verbose", verbose, "Enable info logging");

    // generate
    CommonFlags gen_flags;
    bool baseline = false;
    std::int64_t length_target = 8000;
    CLI::App* gen = app.add_subcommand("generate", "Generate a survey for a topic");
    add_common_options(gen, gen_flags);
    gen->add_flag("--baseline", baseline, "Naive iterative-continuation mode");
    gen->add_option("--length-target", length_target, "Baseline target length in tokens");

    // index build
    CLI::App* index_cmd = app.add_subcommand("index", "Index maintenance");
    index_cmd->require_subcommand(1);
    std::string idx_corpus, idx_out;
    std::size_t idx_dim = 256;
    CLI::App* index_build = index_cmd->add_subcommand("build", "Build a vector index");
    index_build->add_option("--corpus", idx_corpus, "JSONL corpus file")->required();
    index_build->add_option("--out", idx_out, "Output index file")->required();
    index_build->add_option("--dim", idx_dim, "Embedding dimension");

    // evaluate
    CommonFlags eval_flags;
    std::string survey_path, report_out;
    CLI::App* eval_cmd = app.add_subcommand("evaluate", "Evaluate an existing survey.md");
    add_common_options(eval_cmd, eval_flags);
    eval_cmd->add_option("--survey", survey_path, "survey.md to evaluate")->required();
    eval_cmd->add_option("--report-out", report_out, "Where to write report.json");

    // meta-eval
    std::vector<std::string> ranking_files;
    CLI::App* meta = app.add_subcommand("meta-eval", "Spearman rho between two rankings");
    meta->add_option("--rankings", ranking_files, "Two JSON ranking files")->expected(2);

    CLI11_PARSE(app, argc, argv);
    surveygen::set_log_level(verbose ? surveygen::LogLevel::kInfo : surveygen::LogLevel::kWarn);

    try {
        if (gen->parsed()) return cmd_generate(gen, gen_flags, baseline, length_target);
        if (index_build->parsed()) return cmd_index_build(idx_corpus, idx_out, idx_dim);
        if (eval_cmd->parsed()) return cmd_evaluate(eval_cmd, eval_flags, survey_path, report_out);
        if (meta->parsed()) return cmd_meta_eval(ranking_files);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
