// Copyright 2026 The Fracsim Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//
// fracsim command-line interface.
//
//   fracsim evaluate  <scenes...>  --config c.json --out-dir results
//   fracsim qa        <scenes...>  --config c.json --out-dir results
//   fracsim aggregate <results...> --out-dir results
//   fracsim generate  --family rear_end_lead_brake --n 100 --seed 7 --out-dir scenes
//
// Exit codes: 0 success, 1 hard error, 2 partial (some scenes failed).

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "fracsim/behavior.hpp"
#include "fracsim/config.hpp"
#include "fracsim/generate.hpp"
#include "fracsim/pipeline.hpp"
#include "fracsim/risk.hpp"
#include "fracsim/scene_io.hpp"

namespace fs = std::filesystem;
using namespace fracsim;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitHardError = 1;
constexpr int kExitPartial = 2;

/// Expands files and directories (non-recursive *.json) into a sorted list.
std::vector<fs::path> expand_inputs(const std::vector<std::string>& args) {
    std::vector<fs::path> files;
    for (const auto& arg : args) {
        const fs::path p(arg);
        if (fs::is_directory(p)) {
            for (const auto& entry : fs::directory_iterator(p)) {
                if (entry.is_regular_file() && entry.path().extension() == ".json") {
                    files.push_back(entry.path());
                }
            }
        } else {
            files.push_back(p);
        }
    }
    std::sort(files.begin(), files.end());
    return files;
}

std::string csv_escape(const std::string& field) {
    if (field.find_first_of(",\"\n\r") == std::string::npos) return field;
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

struct CommonOptions {
    std::string config_path;
    std::string out_dir = "results";
    std::optional<std::uint64_t> seed;
    std::optional<unsigned> jobs;
    std::optional<double> dt;
};

void add_common(CLI::App* cmd, CommonOptions& opt) {
    cmd->add_option("--config", opt.config_path, "engine configuration file (JSON)");
    cmd->add_option("--out-dir", opt.out_dir, "output directory");
    cmd->add_option("--seed", opt.seed, "random seed (overrides config)");
    cmd->add_option("--jobs", opt.jobs, "worker threads (overrides config)");
    cmd->add_option("--dt", opt.dt, "simulation timestep in seconds (overrides config)");
}

EngineConfig make_config(const CommonOptions& opt) {
    EngineConfig config;
    if (!opt.config_path.empty()) {
        std::ifstream in(opt.config_path);
        if (!in) throw ConfigError("cannot read config file: " + opt.config_path);
        config = load_engine_config(in);
    }
    if (opt.seed) config.seed = *opt.seed;
    if (opt.jobs) config.jobs = *opt.jobs;
    if (opt.dt) config.dt = *opt.dt;
    validate_config(config);
    return config;
}

BehaviorModel make_model(const EngineConfig& config) {
    if (config.behavior_model_path.empty()) return default_behavior_model();
    std::ifstream in(config.behavior_model_path);
    if (!in) throw ConfigError("cannot read behavior model: " + config.behavior_model_path);
    return load_behavior_model(in);
}

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    out << content;
}

struct SceneJob {
    fs::path file;
    std::optional<SceneEvaluation> evaluation;
    std::string error;
};

/// Parses and evaluates every input scene; per-scene failures are recorded,
/// not fatal.
std::vector<SceneJob> run_pipeline(const std::vector<fs::path>& files,
                                   const BehaviorModel& model, const EngineConfig& config) {
    std::vector<SceneJob> jobs(files.size());
    for (std::size_t i = 0; i < files.size(); ++i) jobs[i].file = files[i];
    parallel_for_index(files.size(), config.jobs, [&](std::size_t i) {
        try {
            std::ifstream in(files[i], std::ios::binary);
            if (!in) throw ParseError("cannot read file");
            const ConflictScene scene = parse_scene(in);
            jobs[i].evaluation = evaluate_pipeline(scene, model, config);
        } catch (const std::exception& e) {
            jobs[i].error = e.what();
        }
    });
    return jobs;
}

int finish_batch(const std::vector<SceneJob>& jobs, const fs::path& out_dir,
                 const char* summary_name) {
    nlohmann::ordered_json summary;
    summary["scenes"] = nlohmann::ordered_json::array();
    std::size_t failures = 0;
    for (const auto& job : jobs) {
        nlohmann::ordered_json row;
        row["file"] = job.file.string();
        if (job.evaluation) {
            row["status"] = "ok";
            row["scene_id"] = job.evaluation->fractional.scene_id;
        } else {
            row["status"] = "error";
            row["error"] = job.error;
            ++failures;
        }
        summary["scenes"].push_back(std::move(row));
    }
    summary["total"] = jobs.size();
    summary["failed"] = failures;
    write_file(out_dir / summary_name, summary.dump(2) + "\n");
    if (failures == jobs.size() && !jobs.empty()) return kExitHardError;
    return failures > 0 ? kExitPartial : kExitOk;
}

int cmd_evaluate(const std::vector<std::string>& inputs, const CommonOptions& opt) {
    const EngineConfig config = make_config(opt);
    const BehaviorModel model = make_model(config);
    const auto files = expand_inputs(inputs);
    if (files.empty()) {
        std::cerr << "evaluate: no input scenes\n";
        return kExitHardError;
    }
    fs::create_directories(opt.out_dir);
    const auto jobs = run_pipeline(files, model, config);
    for (const auto& job : jobs) {
        if (!job.evaluation) {
            std::cerr << "error: " << job.file.string() << ": " << job.error << "\n";
            continue;
        }
        const fs::path out = fs::path(opt.out_dir) / (job.file.stem().string() + ".result.json");
        write_file(out, result_to_json(*job.evaluation).dump(2) + "\n");
    }
    return finish_batch(jobs, opt.out_dir, "evaluate_summary.json");
}

int cmd_qa(const std::vector<std::string>& inputs, const CommonOptions& opt) {
    const EngineConfig config = make_config(opt);
    const BehaviorModel model = make_model(config);
    const auto files = expand_inputs(inputs);
    if (files.empty()) {
        std::cerr << "qa: no input scenes\n";
        return kExitHardError;
    }
    fs::create_directories(opt.out_dir);
    const auto jobs = run_pipeline(files, model, config);

    std::string csv =
        "scene_id,applicable,check1_reconstruction,check2_severity_support,"
        "check3_nrm_not_better,annotated,reconstructed,nrm,p_annotated\n";
    std::size_t applicable = 0;
    std::size_t pass1 = 0;
    std::size_t pass2 = 0;
    std::size_t pass3 = 0;
    for (const auto& job : jobs) {
        if (!job.evaluation) {
            std::cerr << "error: " << job.file.string() << ": " << job.error << "\n";
            continue;
        }
        const auto& ev = *job.evaluation;
        const auto& qa = ev.qa;
        char buf[64];
        if (qa.applicable) {
            ++applicable;
            pass1 += qa.check1 ? 1 : 0;
            pass2 += qa.check2 ? 1 : 0;
            pass3 += qa.check3 ? 1 : 0;
            std::snprintf(buf, sizeof buf, "%.9g", qa.p_annotated);
            csv += csv_escape(ev.fractional.scene_id) + ",yes," +
                   (qa.check1 ? "pass" : "fail") + std::string(",") +
                   (qa.check2 ? "pass" : "fail") + "," + (qa.check3 ? "pass" : "fail") + "," +
                   std::string(to_string(qa.annotated)) + "," +
                   std::string(to_string(qa.reconstructed)) + "," +
                   std::string(to_string(qa.nrm)) + "," + buf + "\n";
        } else {
            csv += csv_escape(ev.fractional.scene_id) + ",no,n/a,n/a,n/a,,,,\n";
        }
    }
    write_file(fs::path(opt.out_dir) / "qa_report.csv", csv);

    std::cout << "qa: " << applicable << " annotated scenes";
    if (applicable > 0) {
        const auto rate = [&](std::size_t n) {
            return 100.0 * static_cast<double>(n) / static_cast<double>(applicable);
        };
        std::printf(
            "; pass rates: check1 %.1f%%, check2 %.1f%%, check3 %.1f%%\n",
            rate(pass1), rate(pass2), rate(pass3));
    } else {
        std::cout << "; checks not applicable\n";
    }
    return finish_batch(jobs, opt.out_dir, "qa_summary.json");
}

int cmd_aggregate(const std::vector<std::string>& inputs, const CommonOptions& opt) {
    const auto files = expand_inputs(inputs);
    if (files.empty()) {
        std::cerr << "aggregate: no input results\n";
        return kExitHardError;
    }
    std::map<std::string, FractionalCollisionResult> results;
    std::map<std::string, SeverityLevel> gts;
    std::map<std::string, SeverityLevel> nrms;
    for (const auto& file : files) {
        if (file.filename().string().find(".result.json") == std::string::npos &&
            file.extension() == ".json" && file.stem().string().ends_with("summary")) {
            continue;  // skip batch summaries living next to results
        }
        std::ifstream in(file, std::ios::binary);
        if (!in) {
            std::cerr << "aggregate: cannot read " << file.string() << "\n";
            return kExitHardError;
        }
        nlohmann::json doc;
        try {
            doc = nlohmann::json::parse(in);
            if (!doc.contains("scene_id") || !doc.contains("p")) continue;
            const ResultSummary summary = parse_result_summary(doc);
            results[summary.scene_id] = summary.fractional;
            gts[summary.scene_id] = summary.gt;
            nrms[summary.scene_id] = summary.nrm;
        } catch (const std::exception& e) {
            std::cerr << "aggregate: " << file.string() << ": " << e.what() << "\n";
            return kExitHardError;
        }
    }
    try {
        const CorpusReport report = aggregate_corpus(results, gts, nrms);
        fs::create_directories(opt.out_dir);
        write_file(fs::path(opt.out_dir) / "corpus_report.csv", report.to_csv());
        std::printf("scenes: %zu\n", results.size());
        std::printf("fractional_total: %.6f\n", report.total(Framework::Fractional));
        std::printf("gt_total: %.0f\n", report.total(Framework::GroundTruth));
        std::printf("nrm_total: %.0f\n", report.total(Framework::Nrm));
    } catch (const std::exception& e) {
        std::cerr << "aggregate: " << e.what() << "\n";
        return kExitHardError;
    }
    return kExitOk;
}

struct GenerateOptions {
    std::string family = "rear_end_lead_brake";
    std::size_t n = 10;
    std::string gt_mode = "from-model";
    double fixed_hrt = 1.0;
    double fixed_jerk = -10.0;
    double fixed_a_ss = -5.0;
};

int cmd_generate(const GenerateOptions& gen, const CommonOptions& opt) {
    const EngineConfig config = make_config(opt);
    const BehaviorModel model = make_model(config);
    const auto family = parse_conflict_type(gen.family);
    if (!family) {
        std::cerr << "generate: unknown family '" << gen.family << "'\n";
        return kExitHardError;
    }
    const auto mode = parse_gt_mode(gen.gt_mode);
    if (!mode) {
        std::cerr << "generate: unknown gt mode '" << gen.gt_mode << "'\n";
        return kExitHardError;
    }
    SyntheticScenarioSpec spec = SyntheticScenarioSpec::defaults_for(*family);
    spec.gt_mode = *mode;
    spec.fixed_params = {gen.fixed_hrt, gen.fixed_jerk, gen.fixed_a_ss};
    fs::create_directories(opt.out_dir);
    for (std::size_t i = 0; i < gen.n; ++i) {
        char name[64];
        std::snprintf(name, sizeof name, "%s_%05zu", to_string(*family).data(), i);
        auto rng = scene_rng(config.seed, i);
        const ConflictScene scene = generate_scene(spec, model, config, rng, name);
        write_file(fs::path(opt.out_dir) / (std::string(name) + ".json"),
                   serialize_scene_text(scene));
    }
    std::printf("generated %zu scenes in %s\n", gen.n, opt.out_dir.c_str());
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"fracsim: counterfactual two-agent conflict simulation and "
                 "fractional-collision risk estimation"};
    app.require_subcommand(1);

    CommonOptions opt_eval;
    CommonOptions opt_qa;
    CommonOptions opt_agg;
    CommonOptions opt_gen;
    std::vector<std::string> eval_inputs;
    std::vector<std::string> qa_inputs;
    std::vector<std::string> agg_inputs;
    GenerateOptions gen;

    auto* evaluate = app.add_subcommand("evaluate", "evaluate scenes into result JSON files");
    evaluate->add_option("scenes", eval_inputs, "scene files or directories")->required();
    add_common(evaluate, opt_eval);

    auto* qa = app.add_subcommand("qa", "run the three data-quality checks on annotated scenes");
    qa->add_option("scenes", qa_inputs, "scene files or directories")->required();
    add_common(qa, opt_qa);

    auto* aggregate = app.add_subcommand("aggregate", "aggregate result files into the corpus report");
    aggregate->add_option("results", agg_inputs, "result files or directories")->required();
    add_common(aggregate, opt_agg);

    auto* generate = app.add_subcommand("generate", "generate synthetic annotated scenes");
    generate->add_option("--family", gen.family,
                         "rear_end_lead_brake|crossing_straight|cut_in|vru_crossing");
    generate->add_option("--n", gen.n, "number of scenes");
    generate->add_option("--gt-mode", gen.gt_mode, "from-model|fixed-params|nonreactive");
    generate->add_option("--hrt", gen.fixed_hrt, "fixed GT reaction time (s)");
    generate->add_option("--jerk", gen.fixed_jerk, "fixed GT brake jerk (m/s^3, < 0)");
    generate->add_option("--a-ss", gen.fixed_a_ss, "fixed GT steady deceleration (m/s^2, < 0)");
    add_common(generate, opt_gen);

    CLI11_PARSE(app, argc, argv);

    try {
        if (evaluate->parsed()) return cmd_evaluate(eval_inputs, opt_eval);
        if (qa->parsed()) return cmd_qa(qa_inputs, opt_qa);
        if (aggregate->parsed()) return cmd_aggregate(agg_inputs, opt_agg);
        if (generate->parsed()) return cmd_generate(gen, opt_gen);
    } catch (const std::exception& e) {
        std::cerr << "fracsim: " << e.what() << "\n";
        return kExitHardError;
    }
    return kExitOk;
}
