// SPDX-License-Identifier: Apache-2.0

#include "chgen/cli.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "chgen/compressor.hpp"
#include "chgen/datasets.hpp"
#include "chgen/error.hpp"
#include "chgen/genmodel.hpp"
#include "chgen/landscape.hpp"
#include "chgen/metrics.hpp"
#include "io_util.hpp"
#include "json.hpp"

namespace chgen::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Files are written into a hidden sibling directory and moved into place only
// once every output of the subcommand has been produced.
class Staging {
public:
    explicit Staging(const fs::path& primary) {
        target_ = primary.parent_path().empty() ? fs::path(".") : primary.parent_path();
        dir_ = target_ / (".chgen-staging-" + primary.filename().string());
        std::error_code ec;
        fs::remove_all(dir_, ec);
        if (!fs::create_directories(dir_, ec) && ec) throw IoError("cannot create " + dir_.string() + ": " + ec.message());
    }
    Staging(const Staging&) = delete;
    Staging& operator=(const Staging&) = delete;
    ~Staging() {
        std::error_code ec;
        fs::remove_all(dir_, ec);
    }

    fs::path path(const fs::path& final_path) const { return dir_ / final_path.filename(); }

    void commit() {
        std::vector<fs::path> moved;
        try {
            for (const auto& entry : fs::directory_iterator(dir_)) {
                const auto dest = target_ / entry.path().filename();
                fs::rename(entry.path(), dest);
                moved.push_back(dest);
            }
        } catch (const fs::filesystem_error& e) {
            std::error_code ec;
            for (const auto& p : moved) fs::remove(p, ec);
            throw IoError(std::string("cannot move outputs into place: ") + e.what());
        }
    }

private:
    fs::path target_;
    fs::path dir_;
};

struct Manifest {
    std::string subcommand;
    json config = json::object();
    std::uint64_t seed = 0;
    std::vector<std::string> inputs;
    std::vector<std::string> outputs;
};

void write_manifest(const Manifest& m, const fs::path& primary, const Staging& staging, double seconds) {
    const json doc{{"subcommand", m.subcommand}, {"config", m.config},         {"seed", m.seed},
                   {"inputs", m.inputs},         {"outputs", m.outputs},       {"version", kVersion},
                   {"wall_seconds", seconds}};
    const fs::path path = primary.string() + ".manifest.json";
    io::write_file(staging.path(path), doc.dump(2) + "\n");
}

fs::path with_suffix(const fs::path& p, const std::string& suffix) {
    auto out = p;
    out.replace_extension();
    return out.string() + suffix;
}

json params_json(const datasets::ParamList& list) {
    json out = json::array();
    for (const auto& p : list) out.push_back({{"gain", p.gain}, {"theta_a", p.theta_a}, {"theta_d", p.theta_d}});
    return out;
}

std::vector<double> parse_doubles(const std::string& text, const std::string& flag) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            out.push_back(std::stod(item, &used));
            if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw ValidationError(flag + ": '" + item + "' is not a number");
        }
    }
    return out;
}

std::vector<compressor::NamedDataset> parse_named(const std::vector<std::string>& items, const std::string& flag,
                                                  std::vector<std::string>& inputs) {
    std::vector<compressor::NamedDataset> out;
    for (const auto& item : items) {
        const auto eq = item.find('=');
        if (eq == std::string::npos || eq == 0 || eq + 1 == item.size()) {
            throw ValidationError(flag + ": expected name=path, got '" + item + "'");
        }
        const std::string path = item.substr(eq + 1);
        inputs.push_back(path);
        out.push_back({item.substr(0, eq), datasets::read_dataset(path)});
    }
    return out;
}

struct Options {
    // gen-dataset
    std::string spec_path;
    std::size_t count = 0;
    std::optional<std::uint64_t> seed_override;
    // train
    std::string dataset_path;
    std::string mode = "linearized";
    genmodel::VaeConfig vae;
    bool complex_gains = false;
    bool verbose = false;
    // sample / extract-params
    std::string model_path;
    std::uint64_t seed = 0;
    double threshold = 0.1;
    // metrics
    std::string a_path;
    std::string b_path;
    std::string metric = "all";
    // landscape
    std::string antennas = "4,16,64";
    std::size_t grid = 256;
    double theta_ref = 1.0;
    std::string range = "-1.5707963267948966,1.5707963267948966";
    std::size_t bins = 16;
    // compress-eval
    std::vector<std::string> train_sets;
    std::vector<std::string> test_sets;
    compressor::CompressorConfig comp;

    std::string out;
};

using Clock = std::chrono::steady_clock;

void finish(Manifest& manifest, const fs::path& primary, Staging& staging, Clock::time_point start) {
    const double seconds = std::chrono::duration<double>(Clock::now() - start).count();
    write_manifest(manifest, primary, staging, seconds);
    staging.commit();
}

void cmd_gen_dataset(const Options& o) {
    const auto start = Clock::now();
    if (o.count < 1) throw ValidationError("--count: must be >= 1");
    auto spec = datasets::load_scenario(o.spec_path);
    if (o.seed_override) spec.seed = *o.seed_override;
    const auto ds = datasets::generate_dataset(spec, o.count);

    const fs::path out = o.out;
    Staging staging(out);
    datasets::write_dataset(ds, staging.path(out));
    Manifest m{"gen-dataset", json::parse(datasets::scenario_to_json(spec)), spec.seed, {o.spec_path},
               {out.string(), datasets::params_sidecar_path(out).string()}};
    m.config["count"] = o.count;
    finish(m, out, staging, start);
}

void cmd_train(Options o) {
    const auto start = Clock::now();
    auto& cfg = o.vae;
    cfg.mode = genmodel::mode_from_string(o.mode);
    cfg.complex_gains = o.complex_gains;
    const auto ds = datasets::read_dataset(o.dataset_path);
    cfg.array = ds.array;
    cfg.validate();

    const fs::path out = o.out;
    const fs::path loss_csv = with_suffix(out, ".loss.csv");
    Staging staging(out);
    std::string csv = "epoch,loss\n";
    const auto ckpt = genmodel::train(ds, cfg, [&](std::size_t epoch, double loss) {
        char line[64];
        std::snprintf(line, sizeof line, "%zu,%.17g\n", epoch, loss);
        csv += line;
        if (o.verbose) std::cerr << "epoch " << epoch << " loss " << loss << "\n";
    });
    genmodel::write_checkpoint(ckpt, staging.path(out));
    io::write_file(staging.path(loss_csv), csv);
    Manifest m{"train", json::parse(genmodel::config_to_json(cfg)), cfg.seed, {o.dataset_path},
               {out.string(), loss_csv.string()}};
    finish(m, out, staging, start);
}

void cmd_sample(const Options& o) {
    const auto start = Clock::now();
    if (o.count < 1) throw ValidationError("--count: must be >= 1");
    const auto ckpt = genmodel::read_checkpoint(o.model_path);
    const auto result = genmodel::sample_channels(ckpt, o.count, o.seed);
    const fs::path out = o.out;
    Staging staging(out);
    datasets::write_dataset(result.channels, staging.path(out));
    Manifest m{"sample", {{"count", o.count}, {"model", json::parse(genmodel::config_to_json(ckpt.config))}},
               o.seed, {o.model_path}, {out.string()}};
    finish(m, out, staging, start);
}

void cmd_extract(const Options& o) {
    const auto start = Clock::now();
    if (o.count < 1) throw ValidationError("--count: must be >= 1");
    if (!(o.threshold >= 0.0)) throw ValidationError("--threshold: must be >= 0");
    const auto ckpt = genmodel::read_checkpoint(o.model_path);
    const auto result = genmodel::sample_channels(ckpt, o.count, o.seed);
    json doc = json::array();
    for (std::size_t i = 0; i < o.count; ++i) {
        const auto list = ckpt.config.mode == genmodel::Mode::Direct
                              ? result.params[i]
                              : genmodel::extract_params(result.gains[i], ckpt.config.dictionary_config(), o.threshold);
        doc.push_back({{"sample", i}, {"paths", params_json(list)}});
    }
    const fs::path out = o.out;
    Staging staging(out);
    io::write_file(staging.path(out), doc.dump(2) + "\n");
    Manifest m{"extract-params", {{"count", o.count}, {"threshold", o.threshold}}, o.seed, {o.model_path},
               {out.string()}};
    finish(m, out, staging, start);
}

void cmd_metrics(const Options& o) {
    const auto start = Clock::now();
    if (o.metric != "w2" && o.metric != "mmd" && o.metric != "nmse" && o.metric != "all") {
        throw ValidationError("--metric: expected w2, mmd, nmse or all");
    }
    const auto a = datasets::read_dataset(o.a_path);
    const auto b = datasets::read_dataset(o.b_path, datasets::Shape{a.array.n_r, a.array.n_t});
    const auto va = metrics::vectorize(a);
    const auto vb = metrics::vectorize(b);
    std::vector<metrics::MetricResult> results;
    auto add = [&](const std::string& name, double value) {
        results.push_back({name, value, a.size(), b.size(), va.dim()});
    };
    if (o.metric == "w2" || o.metric == "all") add("w2", metrics::w2_gaussian(va, vb));
    if (o.metric == "mmd" || o.metric == "all") add("mmd", metrics::mmd_rbf(va, vb));
    if (o.metric == "nmse" || (o.metric == "all" && a.size() == b.size())) add("nmse", metrics::mean_nmse(a, b));

    const fs::path out = o.out;
    Staging staging(out);
    io::write_file(staging.path(out), metrics::to_json(results) + "\n");
    Manifest m{"metrics", {{"metric", o.metric}}, 0, {o.a_path, o.b_path}, {out.string()}};
    finish(m, out, staging, start);
}

void cmd_landscape(const Options& o) {
    const auto start = Clock::now();
    const auto range = parse_doubles(o.range, "--range");
    if (range.size() != 2) throw ValidationError("--range: expected low,high");
    std::vector<std::size_t> antennas;
    for (double n : parse_doubles(o.antennas, "--antennas")) {
        if (!(n >= 1.0) || n != std::floor(n)) throw ValidationError("--antennas: counts must be positive integers");
        antennas.push_back(static_cast<std::size_t>(n));
    }
    if (antennas.empty()) throw ValidationError("--antennas: at least one count is required");

    const fs::path out = o.out;
    Staging staging(out);
    Manifest m{"landscape",
               {{"antennas", antennas}, {"grid", o.grid}, {"theta_ref", o.theta_ref}, {"range", range}, {"bins", o.bins}},
               0,
               {},
               {out.string()}};
    std::vector<landscape::SweepEntry> entries;
    for (auto n : antennas) {
        ppgc::ArrayConfig array;
        array.n_r = n;
        array.n_t = n;
        const auto surface =
            landscape::compute_surface({1.0, o.theta_ref, o.theta_ref}, array, o.grid, {range[0], range[1]});
        landscape::SweepEntry e;
        e.antennas = n;
        e.minima_count = landscape::count_strict_local_minima(surface);
        e.min_loss = *std::min_element(surface.values.data().begin(), surface.values.data().end());
        e.gradient_bins = landscape::gradient_magnitude_stats(surface, o.bins);
        entries.push_back(std::move(e));
        const fs::path csv = with_suffix(out, "_n" + std::to_string(n) + ".csv");
        io::write_file(staging.path(csv), landscape::surface_csv(surface));
        m.outputs.push_back(csv.string());
    }
    io::write_file(staging.path(out), landscape::summary_json(entries, o.grid) + "\n");
    finish(m, out, staging, start);
}

void cmd_compress_eval(const Options& o) {
    const auto start = Clock::now();
    Manifest m{"compress-eval", json::object(), o.comp.seed, {}, {}};
    const auto train = parse_named(o.train_sets, "--train", m.inputs);
    const auto test = parse_named(o.test_sets, "--test", m.inputs);
    const auto table = compressor::cross_eval(train, test, o.comp);

    const fs::path out = o.out;
    const fs::path json_out = with_suffix(out, ".json");
    Staging staging(out);
    io::write_file(staging.path(out), table.to_csv());
    io::write_file(staging.path(json_out), table.to_json() + "\n");
    m.config = {{"code_dim", o.comp.code_dim}, {"hidden", o.comp.hidden}, {"epochs", o.comp.epochs},
                {"batch_size", o.comp.batch_size}, {"lr", o.comp.lr}};
    m.outputs = {out.string(), json_out.string()};
    finish(m, out, staging, start);
}

}  // namespace

int run(int argc, const char* const* argv) {
    CLI::App app{"Geometric MIMO channel generation toolkit"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);
    Options o;

    auto* gen = app.add_subcommand("gen-dataset", "Sample a synthetic channel dataset from a scenario file");
    gen->add_option("--spec", o.spec_path, "Scenario JSON")->required();
    gen->add_option("--count", o.count, "Number of channels")->required();
    gen->add_option("--seed", o.seed_override, "Override the scenario seed");
    gen->add_option("--out", o.out, "Output CHM1 file")->required();

    auto* train = app.add_subcommand("train", "Train a channel VAE");
    auto& v = o.vae;
    train->add_option("--dataset", o.dataset_path, "Training CHM1 file")->required();
    train->add_option("--mode", o.mode, "linearized or direct")->capture_default_str();
    train->add_option("--resolution", v.resolution, "Dictionary angle bins R")->capture_default_str();
    train->add_option("--latent", v.latent_dim, "Latent dimension")->capture_default_str();
    train->add_option("--epochs", v.epochs)->capture_default_str();
    train->add_option("--batch", v.batch_size)->capture_default_str();
    train->add_option("--lr", v.lr)->capture_default_str();
    train->add_option("--alpha-d", v.alpha_d, "KL weight")->capture_default_str();
    train->add_option("--alpha-s", v.alpha_s, "L1 weight on the gain matrix")->capture_default_str();
    train->add_option("--paths", v.paths, "Path count (direct mode)");
    train->add_option("--seed", v.seed)->capture_default_str();
    train->add_flag("--complex-gains", o.complex_gains, "Complex-valued gain matrix");
    train->add_flag("--verbose", o.verbose, "Print per-epoch loss to stderr");
    train->add_option("--out", o.out, "Output CKP1 checkpoint")->required();

    auto* sample = app.add_subcommand("sample", "Generate channels from a trained checkpoint");
    sample->add_option("--model", o.model_path)->required();
    sample->add_option("--count", o.count)->required();
    sample->add_option("--seed", o.seed)->capture_default_str();
    sample->add_option("--out", o.out, "Output CHM1 file")->required();

    auto* extract = app.add_subcommand("extract-params", "Generate samples and report their path parameters");
    extract->add_option("--model", o.model_path)->required();
    extract->add_option("--count", o.count)->required();
    extract->add_option("--seed", o.seed)->capture_default_str();
    extract->add_option("--threshold", o.threshold, "Relative gain threshold")->capture_default_str();
    extract->add_option("--out", o.out, "Output JSON")->required();

    auto* met = app.add_subcommand("metrics", "Compare two channel datasets");
    met->add_option("--a", o.a_path)->required();
    met->add_option("--b", o.b_path)->required();
    met->add_option("--metric", o.metric, "w2, mmd, nmse or all")->capture_default_str();
    met->add_option("--out", o.out, "Output JSON")->required();

    auto* land = app.add_subcommand("landscape", "Single-path loss surfaces over (theta_a, theta_d)");
    land->add_option("--antennas", o.antennas, "Comma-separated array sizes")->capture_default_str();
    land->add_option("--grid", o.grid)->capture_default_str();
    land->add_option("--theta-ref", o.theta_ref)->capture_default_str();
    land->add_option("--range", o.range, "low,high in radians")->capture_default_str();
    land->add_option("--bins", o.bins, "Gradient distance bins")->capture_default_str();
    land->add_option("--out", o.out, "Output JSON summary")->required();

    auto* comp = app.add_subcommand("compress-eval", "Cross-evaluate compression autoencoders");
    comp->add_option("--train", o.train_sets, "name=path,...")->required()->delimiter(',');
    comp->add_option("--test", o.test_sets, "name=path,...")->required()->delimiter(',');
    comp->add_option("--code-dim", o.comp.code_dim)->capture_default_str();
    comp->add_option("--epochs", o.comp.epochs)->capture_default_str();
    comp->add_option("--batch", o.comp.batch_size)->capture_default_str();
    comp->add_option("--lr", o.comp.lr)->capture_default_str();
    comp->add_option("--seed", o.comp.seed)->capture_default_str();
    comp->add_option("--out", o.out, "Output CSV")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (*gen) cmd_gen_dataset(o);
        else if (*train) cmd_train(o);
        else if (*sample) cmd_sample(o);
        else if (*extract) cmd_extract(o);
        else if (*met) cmd_metrics(o);
        else if (*land) cmd_landscape(o);
        else if (*comp) cmd_compress_eval(o);
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const NumericError& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return 3;
    } catch (const IoError& e) {
        std::cerr << "i/o error: " << e.what() << "\n";
        return 4;
    } catch (const fs::filesystem_error& e) {
        std::cerr << "i/o error: " << e.what() << "\n";
        return 4;
    }
    return 0;
}

}  // namespace chgen::cli
