// ecgcnn command-line workbench: ingest MIT-BIH style records into beat
// datasets, render beat images, train/evaluate 1-D and 2-D CNN
// classifiers, sweep noise robustness, verify gradients, and produce
// synthetic pretraining archives for transfer experiments.
//
// Exit codes: 0 success, 1 usage/config error, 2 data error, 3 numerical
// failure.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "ecgcnn/beats.hpp"
#include "ecgcnn/config.hpp"
#include "ecgcnn/dataset.hpp"
#include "ecgcnn/metrics.hpp"
#include "ecgcnn/network.hpp"
#include "ecgcnn/raster.hpp"
#include "ecgcnn/report.hpp"
#include "ecgcnn/rng.hpp"
#include "ecgcnn/synthetic.hpp"
#include "ecgcnn/trainer.hpp"
#include "ecgcnn/wfdb.hpp"

namespace fs = std::filesystem;
using namespace ecgcnn;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitNumerical = 3;

std::string metric_cell(const std::optional<double>& v) {
    if (!v) return "NA";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", *v);
    return buf;
}

void print_report_line(const std::string& tag, const MetricsReport& r) {
    std::printf("%-10s sen %-7s spe %-7s acc %-7s (tp %llu tn %llu fp %llu fn %llu)\n", tag.c_str(),
                metric_cell(r.sensitivity).c_str(), metric_cell(r.specificity).c_str(),
                metric_cell(r.accuracy).c_str(), (unsigned long long)r.matrix.tp,
                (unsigned long long)r.matrix.tn, (unsigned long long)r.matrix.fp,
                (unsigned long long)r.matrix.fn);
}

// ---------------------------------------------------------------------------
// ingest
// ---------------------------------------------------------------------------

struct IngestArgs {
    std::vector<std::string> records;
    std::string out;
    int channel = 0;
};

void run_ingest(const IngestArgs& args) {
    std::vector<Beat> all;
    std::size_t n_records = 0;
    for (const std::string& record_arg : args.records) {
        fs::path path(record_arg);
        wfdb::Record record;
        std::vector<wfdb::Annotation> annotations;
        try {
            if (path.extension() == ".csv") {
                fs::path ann = path;
                ann.replace_extension(".ann.csv");
                std::tie(record, annotations) = wfdb::load_record_csv(path, ann);
            } else {
                if (path.extension().empty()) path.replace_extension(".hea");
                if (path.extension() != ".hea")
                    throw ConfigError("record '" + record_arg +
                                      "' must be a .hea, .csv or bare record name");
                wfdb::RecordHeader header = wfdb::parse_header(read_file_text(path));
                fs::path dat = path.parent_path() / header.signals.at(0).file;
                fs::path atr = path;
                atr.replace_extension(".atr");
                std::tie(record, annotations) = wfdb::load_record(path, dat, atr);
            }
        } catch (const ConfigError&) {
            throw;
        } catch (const Error& e) {
            throw Error(path.string() + ": " + e.what());
        }
        std::vector<Beat> beats = segment_beats(record, annotations, args.channel);
        std::printf("%s: %zu annotations, %zu beats\n", record.header.record_name.c_str(),
                    annotations.size(), beats.size());
        all.insert(all.end(), std::make_move_iterator(beats.begin()),
                   std::make_move_iterator(beats.end()));
        ++n_records;
    }
    std::size_t normal = 0, abnormal = 0;
    for (const Beat& b : all) (b.label == BeatLabel::normal ? normal : abnormal) += 1;
    save_beats(args.out, all);
    std::printf("ingested %zu records: %zu beats (%zu normal, %zu abnormal) -> %s\n", n_records,
                all.size(), normal, abnormal, args.out.c_str());
}

// ---------------------------------------------------------------------------
// render
// ---------------------------------------------------------------------------

struct RenderArgs {
    std::string beats;
    std::string out;
    std::string bounds_from;
    std::vector<double> bounds; // lo hi
    std::string pgm_dir;
    std::size_t pgm_count = 8;
    bool invert = false;
};

void run_render(const RenderArgs& args) {
    std::vector<Beat> beats = load_beats(args.beats);
    AxisBounds bounds;
    if (!args.bounds.empty()) {
        if (args.bounds.size() != 2) throw ConfigError("--bounds takes exactly LO HI");
        bounds = AxisBounds{args.bounds[0], args.bounds[1]};
        if (!(bounds.hi > bounds.lo)) throw ConfigError("--bounds needs LO < HI");
    } else if (!args.bounds_from.empty()) {
        std::vector<Beat> source = load_beats(args.bounds_from);
        bounds = compute_bounds(source);
    } else {
        bounds = compute_bounds(beats);
    }

    std::vector<BeatImage> images;
    images.reserve(beats.size());
    for (const Beat& b : beats) images.push_back(rasterize(b, bounds));
    save_images(args.out, images);
    write_text_file(args.out + ".bounds.json", bounds_json(bounds).dump(2) + "\n");

    if (!args.pgm_dir.empty()) {
        fs::create_directories(args.pgm_dir);
        for (std::size_t i = 0; i < std::min(args.pgm_count, images.size()); ++i)
            write_pgm(fs::path(args.pgm_dir) / ("beat" + std::to_string(i) + ".pgm"), images[i],
                      args.invert);
    }
    std::printf("rendered %zu images at bounds [%.4f, %.4f] mV -> %s\n", images.size(), bounds.lo,
                bounds.hi, args.out.c_str());
}

// ---------------------------------------------------------------------------
// shared config/override handling for train / eval / sweep
// ---------------------------------------------------------------------------

struct ConfigArgs {
    std::string config_path;
    ExperimentConfig config; // after overrides

    // override slots; applied only when the CLI flag was given
    std::string dataset, images, representation, profile, activation, init, transfer, output,
        positive, cv_mode;
    int channels = 0, folds = 0, jobs = 0;
    std::size_t iterations = 0, batch = 0, eval_interval = 0, train_size = 0, test_size = 0;
    double base_lr = 0, finetune_lr_multiplier = 0;
    std::uint64_t seed = 0;
    std::string snr; // comma list, "none" allowed

    CLI::App* attach(CLI::App* cmd) {
        cmd->add_option("--config", config_path, "experiment config JSON");
        cmd->add_option("--dataset", dataset, "ECGB beat dataset (signal-1d)");
        cmd->add_option("--images", images, "ECGI image dataset (image-2d)");
        cmd->add_option("--representation", representation, "signal-1d or image-2d");
        cmd->add_option("--profile", profile, "built-in profile name");
        cmd->add_option("--activation", activation, "tanh|relu|elu[:a]|selu|swish[:b]");
        cmd->add_option("--channels", channels, "image input channels (1 or 3)");
        cmd->add_option("--init", init, "weight init: auto or normal:<sigma>");
        cmd->add_option("--transfer", transfer, "ECGW archive for transfer initialization");
        cmd->add_option("--output", output, "run directory");
        cmd->add_option("--positive-class", positive, "normal or abnormal");
        cmd->add_option("--cv-mode", cv_mode, "redraw or kfold");
        cmd->add_option("--folds", folds, "fold count");
        cmd->add_option("--train-size", train_size, "per-fold training set size");
        cmd->add_option("--test-size", test_size, "per-fold test set size");
        cmd->add_option("--iterations", iterations, "SGD iterations");
        cmd->add_option("--batch", batch, "mini-batch size");
        cmd->add_option("--eval-interval", eval_interval, "iterations between test evaluations");
        cmd->add_option("--base-lr", base_lr, "base learning rate");
        cmd->add_option("--finetune-lr", finetune_lr_multiplier,
                        "learning-rate multiplier for transferred layers");
        cmd->add_option("--seed", seed, "experiment seed");
        cmd->add_option("--jobs", jobs, "concurrent folds");
        cmd->add_option("--snr", snr, "comma list of sweep SNRs in dB ('none' = clean)");
        return cmd;
    }

    void resolve(const CLI::App* cmd) {
        config = config_path.empty() ? ExperimentConfig{} : load_experiment_config(config_path);
        auto given = [cmd](const std::string& flag) { return cmd->count(flag) > 0; };
        if (given("--dataset")) config.dataset = dataset;
        if (given("--images")) config.images = images;
        if (given("--representation")) config.representation = representation_parse(representation);
        if (given("--profile")) { config.profile = profile; config.profile_inline.reset(); }
        if (given("--activation")) config.activation = activation;
        if (given("--channels")) config.channels = channels;
        if (given("--init")) config.init = init;
        if (given("--transfer")) config.transfer_archive = transfer;
        if (given("--output")) config.output_dir = output;
        if (given("--positive-class")) config.positive_class = positive;
        if (given("--cv-mode")) {
            if (cv_mode == "redraw") config.fold_plan.mode = FoldPlan::Mode::redraw;
            else if (cv_mode == "kfold") config.fold_plan.mode = FoldPlan::Mode::kfold;
            else throw ConfigError("--cv-mode must be redraw or kfold");
        }
        if (given("--folds")) config.fold_plan.n_folds = folds;
        if (given("--train-size")) config.fold_plan.train_size = train_size;
        if (given("--test-size")) config.fold_plan.test_size = test_size;
        if (given("--iterations")) config.train.max_iterations = iterations;
        if (given("--batch")) {
            config.train.batch_size = batch;
            config.batch_size_set = true;
        }
        if (given("--eval-interval")) config.train.eval_interval = eval_interval;
        if (given("--base-lr")) config.train.base_lr = base_lr;
        if (given("--finetune-lr")) config.train.finetune_lr_multiplier = finetune_lr_multiplier;
        if (given("--seed")) config.seed = seed;
        if (given("--jobs")) config.jobs = jobs;
        if (given("--snr")) {
            config.snr_list.clear();
            std::string rest = snr;
            while (!rest.empty()) {
                auto comma = rest.find(',');
                std::string tok = rest.substr(0, comma);
                rest = comma == std::string::npos ? "" : rest.substr(comma + 1);
                if (tok == "none") config.snr_list.push_back(std::nullopt);
                else config.snr_list.push_back(std::stod(tok));
            }
            if (config.snr_list.empty()) throw ConfigError("--snr list is empty");
        }
        config.apply_defaults();
        config.positive(); // validate
    }
};

struct LoadedData {
    std::vector<Beat> beats;
    std::vector<BeatImage> images;
    DatasetView view;
    std::vector<BeatLabel> labels;
};

LoadedData load_pool(const ExperimentConfig& config) {
    LoadedData data;
    if (config.representation == Representation::signal_1d) {
        if (config.dataset.empty()) throw ConfigError("signal-1d runs need --dataset (ECGB)");
        data.beats = load_beats(config.dataset);
        data.view = view_of_beats(data.beats);
        for (const Beat& b : data.beats) data.labels.push_back(b.label);
    } else {
        if (config.images.empty()) throw ConfigError("image-2d runs need --images (ECGI)");
        data.images = load_images(config.images);
        data.view = view_of_images(data.images, config.channels);
        for (const BeatImage& im : data.images) data.labels.push_back(im.label);
    }
    return data;
}

std::string default_model_name(const ExperimentConfig& config) {
    return config.activation + (config.representation == Representation::signal_1d ? "-1d" : "-2d");
}

// ---------------------------------------------------------------------------
// train
// ---------------------------------------------------------------------------

void run_train(ConfigArgs& args, const CLI::App* cmd, const std::string& model_name_flag) {
    args.resolve(cmd);
    ExperimentConfig& config = args.config;
    ArchitectureProfile profile = config.make_profile();

    LoadedData data = load_pool(config);
    FoldPlan plan = config.fold_plan;
    plan.seed = derive_seed(config.seed, "folds");
    std::vector<FoldSplit> folds = split_by_label(data.labels, plan);

    WeightArchive transfer;
    ExperimentSetup setup;
    setup.profile = profile;
    setup.train_config = config.train;
    setup.init = InitScheme::parse(config.init);
    setup.seed = derive_seed(config.seed, "experiment");
    setup.positive = config.positive();
    setup.model_name = model_name_flag.empty() ? default_model_name(config) : model_name_flag;
    setup.jobs = config.jobs;
    if (!config.transfer_archive.empty()) {
        transfer = load_archive(config.transfer_archive);
        setup.transfer = &transfer;
    }

    ExperimentResult result = run_experiment(data.view, folds, setup);

    fs::create_directories(config.output_dir);
    const fs::path out(config.output_dir);
    write_text_file(out / "resolved_config.json", resolved_config_json(config).dump(2) + "\n");
    for (std::size_t fold = 0; fold < result.histories.size(); ++fold)
        write_text_file(out / ("history_fold" + std::to_string(fold) + ".csv"),
                        history_csv(result.histories[fold]));
    write_text_file(out / "history.csv", history_csv(result.histories.front()));
    write_text_file(out / "report.json",
                    experiment_report_json(result, resolved_config_json(config)).dump(2) + "\n");
    save_archive(out / "weights.ecgw", archive_from_network(result.fold_nets.front()));

    for (const MetricsReport& r : result.fold_reports)
        print_report_line("fold " + std::to_string(r.fold), r);
    print_report_line("mean", result.mean_report);
    std::printf("run artifacts -> %s\n", config.output_dir.c_str());
}

// ---------------------------------------------------------------------------
// eval
// ---------------------------------------------------------------------------

void run_eval(ConfigArgs& args, const CLI::App* cmd, const std::string& weights,
              const std::string& report_out) {
    args.resolve(cmd);
    ExperimentConfig& config = args.config;
    ArchitectureProfile profile = config.make_profile();
    Network<float> net = network_from_archive(profile, load_archive(weights));

    LoadedData data = load_pool(config);
    MetricsReport report = evaluate_dataset(net, data.view, config.positive());
    report.model = default_model_name(config);
    print_report_line("eval", report);
    if (!report_out.empty()) {
        ordered_json j = metrics_json(report);
        j["model"] = report.model;
        write_text_file(report_out, j.dump(2) + "\n");
    }
}

// ---------------------------------------------------------------------------
// sweep
// ---------------------------------------------------------------------------

void run_sweep(ConfigArgs& args, const CLI::App* cmd, const std::string& weights,
               const std::string& beats_path, const std::string& out_csv,
               const std::string& out_json, const std::string& bounds_json_path,
               const std::vector<double>& bounds_flag, const std::string& model_name_flag) {
    args.resolve(cmd);
    ExperimentConfig& config = args.config;
    ArchitectureProfile profile = config.make_profile();
    Network<float> net = network_from_archive(profile, load_archive(weights));

    std::vector<Beat> beats = load_beats(beats_path);
    AxisBounds bounds{0.0, 1.0};
    if (config.representation == Representation::image_2d) {
        if (!bounds_flag.empty()) {
            if (bounds_flag.size() != 2) throw ConfigError("--bounds takes exactly LO HI");
            bounds = AxisBounds{bounds_flag[0], bounds_flag[1]};
        } else if (!bounds_json_path.empty()) {
            ordered_json j = ordered_json::parse(read_file_text(bounds_json_path));
            bounds = AxisBounds{j.at("lo_mv").get<double>(), j.at("hi_mv").get<double>()};
        } else {
            throw ConfigError("image-2d sweeps need --bounds-json or --bounds");
        }
    }

    std::vector<SweepCondition> conditions;
    for (const auto& s : config.snr_list) conditions.push_back({s});

    std::vector<MetricsReport> reports = robustness_sweep(
        net, beats, conditions, bounds, config.representation, derive_seed(config.seed, "sweep"),
        config.channels, config.positive(),
        model_name_flag.empty() ? default_model_name(config) : model_name_flag);

    write_text_file(out_csv, sweep_csv(reports));
    if (!out_json.empty()) write_text_file(out_json, sweep_json(reports).dump(2) + "\n");
    for (const MetricsReport& r : reports)
        print_report_line(r.snr_db ? (std::to_string(int(*r.snr_db)) + " dB") : "clean", r);
    std::printf("accuracy span across conditions: %.2f points\n", accuracy_span(reports));
    std::printf("sweep table -> %s\n", out_csv.c_str());
}

// ---------------------------------------------------------------------------
// gradcheck
// ---------------------------------------------------------------------------

struct GradcheckArgs {
    std::string profile = "tiny-1d";
    std::string activation = "relu";
    double epsilon = 1e-4;
    double tolerance = 1e-4;
    std::size_t max_coords = 200;
    std::size_t batch = 2;
    std::uint64_t seed = 5;
    double corrupt = 0.0;
};

int run_gradcheck(const GradcheckArgs& args) {
    const ActivationKind act = ActivationKind::parse(args.activation);
    ArchitectureProfile profile = profile_by_name(args.profile, act);
    Network<float> net =
        build_network<float>(profile, InitScheme{}, derive_seed(args.seed, "gradcheck-init"));

    std::vector<std::size_t> chw = chw_of(profile);
    Tensor<float> batch({args.batch, chw[0], chw[1], chw[2]});
    std::mt19937_64 engine = make_engine(derive_seed(args.seed, "gradcheck-input"));
    std::normal_distribution<double> gauss(0.0, 0.5);
    for (float& v : batch.data) v = float(gauss(engine));
    std::vector<int> labels(args.batch);
    for (std::size_t i = 0; i < args.batch; ++i) labels[i] = int(i % 2);

    GradCheckOptions options;
    options.epsilon = args.epsilon;
    options.max_coords_per_tensor = args.max_coords;
    options.sample_seed = derive_seed(args.seed, "gradcheck-sample");
    options.corruption = args.corrupt;
    GradCheckReport report = grad_check(net, batch, labels, options);

    for (const auto& t : report.tensors)
        std::printf("%-14s max rel err %.3e  (%zu coords, %zu near a kink excluded)\n",
                    t.tensor.c_str(), t.max_rel_error, t.coords_checked, t.coords_excluded);
    const bool pass = report.max_rel_error <= args.tolerance;
    std::printf("gradcheck %s: max rel err %.3e (tolerance %.1e)\n", pass ? "PASS" : "FAIL",
                report.max_rel_error, args.tolerance);
    return pass ? kExitOk : kExitNumerical;
}

// ---------------------------------------------------------------------------
// pretrain-synthetic
// ---------------------------------------------------------------------------

struct PretrainArgs {
    std::string out;
    std::size_t count = 600;
    std::size_t iterations = 300;
    std::size_t batch = 32;
    int channels = 1;
    std::string activation = "relu";
    double base_lr = 0.01;
    std::uint64_t seed = 77;
};

void run_pretrain(const PretrainArgs& args) {
    std::vector<Beat> beats =
        generate_pretrain_beats({args.count, derive_seed(args.seed, "pretrain-data")});
    AxisBounds bounds = compute_bounds(beats);
    std::vector<BeatImage> images;
    images.reserve(beats.size());
    for (const Beat& b : beats) images.push_back(rasterize(b, bounds));

    std::vector<BeatLabel> labels;
    for (const BeatImage& im : images) labels.push_back(im.label);
    FoldPlan plan;
    plan.n_folds = 1;
    plan.train_size = args.count * 5 / 6;
    plan.test_size = args.count - plan.train_size;
    plan.seed = derive_seed(args.seed, "pretrain-split");
    FoldSplit split = split_by_label(labels, plan).front();

    ArchitectureProfile profile =
        canonical_2d(ActivationKind::parse(args.activation), std::size_t(args.channels));
    Network<float> net =
        build_network<float>(profile, InitScheme{}, derive_seed(args.seed, "pretrain-init"));

    TrainConfig config;
    config.base_lr = args.base_lr;
    config.batch_size = args.batch;
    config.max_iterations = args.iterations;
    config.eval_interval = std::max<std::size_t>(1, args.iterations / 4);
    config.seed = derive_seed(args.seed, "pretrain-train");

    DatasetView pool = view_of_images(images, args.channels);
    TrainHistory history =
        train(net, subset(pool, split.train), subset(pool, split.test), config);
    save_archive(args.out, archive_from_network(net));
    std::printf("pretrained on %zu waveform/noise images, final test accuracy %.2f%% -> %s\n",
                images.size(), history.back().test_accuracy, args.out.c_str());
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"ECG beat classification workbench (1-D signal and 2-D image CNNs)"};
    app.require_subcommand(1);

    IngestArgs ingest_args;
    CLI::App* ingest = app.add_subcommand("ingest", "parse records into an ECGB beat dataset");
    ingest->add_option("records", ingest_args.records, "record files (.hea or .csv)")->required();
    ingest->add_option("--out", ingest_args.out, "output ECGB path")->required();
    ingest->add_option("--channel", ingest_args.channel, "analysis channel (default 0)");

    RenderArgs render_args;
    CLI::App* render = app.add_subcommand("render", "rasterize beats into an ECGI image dataset");
    render->add_option("--beats", render_args.beats, "input ECGB path")->required();
    render->add_option("--out", render_args.out, "output ECGI path")->required();
    render->add_option("--bounds-from", render_args.bounds_from,
                       "compute axis bounds from this ECGB instead of the input");
    render->add_option("--bounds", render_args.bounds, "explicit axis bounds LO HI (mV)")
        ->expected(2);
    render->add_option("--pgm-dir", render_args.pgm_dir, "directory for PGM previews");
    render->add_option("--pgm-count", render_args.pgm_count, "number of PGM previews");
    render->add_flag("--invert", render_args.invert, "black-on-white PGM previews");

    ConfigArgs train_cfg;
    std::string train_model_name;
    CLI::App* train_cmd = train_cfg.attach(
        app.add_subcommand("train", "cross-validated training; writes a run directory"));
    train_cmd->add_option("--model-name", train_model_name, "model label for reports");

    ConfigArgs eval_cfg;
    std::string eval_weights, eval_report;
    CLI::App* eval_cmd =
        eval_cfg.attach(app.add_subcommand("eval", "evaluate archived weights on a dataset"));
    eval_cmd->add_option("--weights", eval_weights, "ECGW archive")->required();
    eval_cmd->add_option("--report", eval_report, "optional JSON report path");

    ConfigArgs sweep_cfg;
    std::string sweep_weights, sweep_beats, sweep_out, sweep_json_out, sweep_bounds_json,
        sweep_model_name;
    std::vector<double> sweep_bounds;
    CLI::App* sweep_cmd = sweep_cfg.attach(
        app.add_subcommand("sweep", "noise-robustness sweep over SNR conditions"));
    sweep_cmd->add_option("--weights", sweep_weights, "ECGW archive")->required();
    sweep_cmd->add_option("--beats", sweep_beats, "clean test beats (ECGB)")->required();
    sweep_cmd->add_option("--out", sweep_out, "output CSV path")->required();
    sweep_cmd->add_option("--json", sweep_json_out, "optional JSON table path");
    sweep_cmd->add_option("--bounds-json", sweep_bounds_json, "bounds sidecar from render");
    sweep_cmd->add_option("--bounds", sweep_bounds, "explicit axis bounds LO HI (mV)")->expected(2);
    sweep_cmd->add_option("--model-name", sweep_model_name, "model label for the CSV");

    GradcheckArgs grad_args;
    CLI::App* grad_cmd =
        app.add_subcommand("gradcheck", "finite-difference verification of backpropagation");
    grad_cmd->add_option("--profile", grad_args.profile, "profile to check (default tiny-1d)");
    grad_cmd->add_option("--activation", grad_args.activation, "activation (default relu)");
    grad_cmd->add_option("--epsilon", grad_args.epsilon, "finite-difference step");
    grad_cmd->add_option("--tolerance", grad_args.tolerance, "pass threshold on max rel error");
    grad_cmd->add_option("--max-coords", grad_args.max_coords, "sampled coordinates per tensor");
    grad_cmd->add_option("--batch", grad_args.batch, "probe batch size");
    grad_cmd->add_option("--seed", grad_args.seed, "probe seed");
    grad_cmd->add_option("--corrupt", grad_args.corrupt,
                         "scale analytic gradients by (1+x); negative control")
        ->group(""); // hidden

    PretrainArgs pre_args;
    CLI::App* pre_cmd = app.add_subcommand(
        "pretrain-synthetic", "pretrain the 2-D profile on waveform-vs-noise images");
    pre_cmd->add_option("--out", pre_args.out, "output ECGW archive")->required();
    pre_cmd->add_option("--count", pre_args.count, "number of synthetic images");
    pre_cmd->add_option("--iterations", pre_args.iterations, "SGD iterations");
    pre_cmd->add_option("--batch", pre_args.batch, "mini-batch size");
    pre_cmd->add_option("--channels", pre_args.channels, "input channels (1 or 3)");
    pre_cmd->add_option("--activation", pre_args.activation, "activation");
    pre_cmd->add_option("--base-lr", pre_args.base_lr, "base learning rate");
    pre_cmd->add_option("--seed", pre_args.seed, "generation/training seed");

    try {
        app.parse(argc, argv);
        if (ingest->parsed()) run_ingest(ingest_args);
        if (render->parsed()) run_render(render_args);
        if (train_cmd->parsed()) run_train(train_cfg, train_cmd, train_model_name);
        if (eval_cmd->parsed()) run_eval(eval_cfg, eval_cmd, eval_weights, eval_report);
        if (sweep_cmd->parsed())
            run_sweep(sweep_cfg, sweep_cmd, sweep_weights, sweep_beats, sweep_out, sweep_json_out,
                      sweep_bounds_json, sweep_bounds, sweep_model_name);
        if (grad_cmd->parsed()) return run_gradcheck(grad_args);
        if (pre_cmd->parsed()) run_pretrain(pre_args);
        return kExitOk;
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return kExitUsage;
    } catch (const NonFiniteGradient& e) {
        std::fprintf(stderr, "numerical failure: %s\n", e.what());
        return kExitNumerical;
    } catch (const Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitData;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitData;
    }
}
