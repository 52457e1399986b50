#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pidlft/model.hpp"
#include "pidlft/optimizer.hpp"
#include "pidlft/sparse_tensor.hpp"
#include "pidlft/trainer.hpp"

namespace {

using namespace pidlft;

SparseTensor read_tensor(const std::string& path) {
    if (path == "-") return load_coo(std::cin);
    return load_coo_file(path);
}

void write_tensor(const SparseTensor& t, const std::string& path) {
    if (path == "-") {
        save_coo(t, std::cout);
    } else {
        save_coo_file(t, path);
    }
}

SplitRatios to_ratios(const std::vector<double>& r) {
    return SplitRatios{r.at(0), r.at(1), r.at(2)};
}

// Shared hyperparameter flags for train and compare.
struct HyperFlags {
    int rank = 10;
    double eta = 0.01;
    double lambda = 0.0;
    std::string optimizer = "sgd";
    double kp = 1.0;
    double ki = 0.0;
    double kd = 0.0;
    double alpha_i = 0.5;
    double alpha_d = 0.5;
    int max_epochs = 500;
    double tol = 1e-5;
    int patience = 5;
    bool no_shuffle = false;
    double integral_limit = 1e4;
    std::uint64_t seed = 0;

    void attach(CLI::App* cmd) {
        cmd->add_option("--rank", rank, "Factorization rank R")->capture_default_str();
        cmd->add_option("--eta", eta, "Learning rate")->capture_default_str();
        cmd->add_option("--lambda", lambda, "Regularization strength")->capture_default_str();
        cmd->add_option("--optimizer", optimizer, "Update rule")
            ->check(CLI::IsMember({"sgd", "pid_linear", "pid_nonlinear"}))
            ->capture_default_str();
        cmd->add_option("--kp", kp, "Proportional gain")->capture_default_str();
        cmd->add_option("--ki", ki, "Integral gain")->capture_default_str();
        cmd->add_option("--kd", kd, "Derivative gain")->capture_default_str();
        cmd->add_option("--alpha-i", alpha_i, "Integral nonlinearity in (0,1]")
            ->capture_default_str();
        cmd->add_option("--alpha-d", alpha_d, "Derivative nonlinearity in (0,1]")
            ->capture_default_str();
        cmd->add_option("--max-epochs", max_epochs, "Epoch budget")->capture_default_str();
        cmd->add_option("--tol", tol, "Convergence tolerance on validation RMSE differences")
            ->capture_default_str();
        cmd->add_option("--patience", patience,
                        "Consecutive sub-tol differences required to stop")
            ->capture_default_str();
        cmd->add_flag("--no-shuffle", no_shuffle, "Keep a fixed traversal order");
        cmd->add_option("--integral-limit", integral_limit, "PID integral windup clamp")
            ->capture_default_str();
        cmd->add_option("--seed", seed, "Seed for split, initialization and shuffling")
            ->capture_default_str();
    }

    TrainConfig to_config() const {
        TrainConfig cfg;
        cfg.rank = rank;
        cfg.eta = eta;
        cfg.lambda = lambda;
        cfg.optimizer = parse_optimizer_kind(optimizer);
        cfg.gains = PidGains{kp, ki, kd, alpha_i, alpha_d};
        cfg.max_epochs = max_epochs;
        cfg.tol = tol;
        cfg.patience = patience;
        cfg.shuffle = !no_shuffle;
        cfg.seed = seed;
        cfg.integral_limit = integral_limit;
        return cfg;
    }
};

int run_split(const std::string& input, const std::string& output,
              const std::vector<double>& ratios, std::uint64_t seed) {
    const SparseTensor t = read_tensor(input);
    const SplitResult parts = split(t, to_ratios(ratios), seed);
    save_coo_file(parts.train, output + ".train.coo");
    save_coo_file(parts.val, output + ".val.coo");
    save_coo_file(parts.test, output + ".test.coo");
    return 0;
}

int run_synth(const std::string& output, const std::vector<Index>& shape, int rank, double dens,
              double noise_sd, std::uint64_t seed) {
    const TensorShape s{shape.at(0), shape.at(1), shape.at(2)};
    const SparseTensor t = synth_lowrank(s, rank, dens, noise_sd, seed);
    write_tensor(t, output);
    return 0;
}

struct LoadedSets {
    SparseTensor train;
    SparseTensor val;
    std::optional<SparseTensor> test;
};

LoadedSets load_train_sets(const std::string& input, const std::string& val_path,
                           const std::vector<double>& ratios, std::uint64_t seed) {
    if (!val_path.empty()) {
        return LoadedSets{read_tensor(input), read_tensor(val_path), std::nullopt};
    }
    const SparseTensor full = read_tensor(input);
    SplitResult parts = split(full, to_ratios(ratios), seed);
    return LoadedSets{std::move(parts.train), std::move(parts.val), std::move(parts.test)};
}

int run_train(const HyperFlags& hp, const std::string& input, const std::string& val_path,
              const std::vector<double>& ratios, const std::string& output,
              const std::string& report_path, const std::string& train_out,
              const std::string& val_out, const std::string& test_out) {
    LoadedSets sets = load_train_sets(input, val_path, ratios, hp.seed);
    if (!train_out.empty()) save_coo_file(sets.train, train_out);
    if (!val_out.empty()) save_coo_file(sets.val, val_out);
    if (!test_out.empty()) {
        if (!sets.test) {
            throw std::runtime_error("train: --test-output requires the internal split mode");
        }
        save_coo_file(*sets.test, test_out);
    }

    TensorShape shape = sets.train.shape();
    shape.n_stations = std::max(shape.n_stations, sets.val.shape().n_stations);
    shape.n_metrics = std::max(shape.n_metrics, sets.val.shape().n_metrics);
    shape.n_slots = std::max(shape.n_slots, sets.val.shape().n_slots);

    const TrainConfig cfg = hp.to_config();
    Model model = Model::init(shape, cfg.rank, InitScheme{0.0, 0.05, hp.seed});
    const TrainReport report = train(model, sets.train, sets.val, cfg);

    if (output == "-") {
        save_model(model, std::cout);
    } else {
        save_model_file(model, output);
    }
    if (!report_path.empty()) save_report_file(report, report_path);

    std::cout << "optimizer,epochs,converged,final_val_rmse\n";
    std::printf("%s,%d,%s,%.10g\n", to_string(cfg.optimizer), report.epochs_run,
                report.converged ? "true" : "false", report.final_val_rmse);
    return 0;
}

int run_eval(const std::string& model_path, const std::string& input) {
    const Model model = load_model_file(model_path);
    const SparseTensor test = read_tensor(input);
    std::printf("%.10g\n", rmse(model, test));
    return 0;
}

int run_impute(const std::string& model_path, const std::string& input,
               const std::string& output) {
    const Model model = load_model_file(model_path);

    std::ifstream file;
    std::istream* in = &std::cin;
    if (input != "-") {
        file.open(input);
        if (!file) throw std::runtime_error("impute: cannot open '" + input + "'");
        in = &file;
    }

    std::vector<Entry> predictions;
    std::string line;
    long line_no = 0;
    bool first = true;
    while (std::getline(*in, line)) {
        ++line_no;
        std::string stripped = line;
        while (!stripped.empty() && (stripped.back() == '\r' || stripped.back() == ' ')) {
            stripped.pop_back();
        }
        if (stripped.empty()) continue;
        long long i, j, k;
        const int got = std::sscanf(stripped.c_str(), "%lld,%lld,%lld", &i, &j, &k);
        if (got != 3) {
            if (first) {  // optional header
                first = false;
                continue;
            }
            throw std::runtime_error("impute: line " + std::to_string(line_no) +
                                     ": malformed query '" + stripped + "'");
        }
        first = false;
        // Refuses queries outside the trained shape.
        predictions.push_back(Entry{i, j, k, model.predict(i, j, k)});
    }
    if (predictions.empty()) {
        throw std::runtime_error("impute: no queries");
    }
    write_tensor(SparseTensor(model.shape(), std::move(predictions)), output);
    return 0;
}

int run_compare(const HyperFlags& hp, const std::string& input, const std::string& val_path,
                const std::string& test_path, const std::vector<double>& ratios,
                const std::string& output, const std::string& variants_arg) {
    std::optional<SparseTensor> train_set, val_set, test_set;
    if (!val_path.empty() || !test_path.empty()) {
        if (val_path.empty() || test_path.empty()) {
            throw std::runtime_error("compare: --val and --test must be given together");
        }
        train_set = read_tensor(input);
        val_set = read_tensor(val_path);
        test_set = read_tensor(test_path);
    } else {
        const SparseTensor full = read_tensor(input);
        SplitResult parts = split(full, to_ratios(ratios), hp.seed);
        train_set = std::move(parts.train);
        val_set = std::move(parts.val);
        test_set = std::move(parts.test);
    }

    std::vector<TrainConfig> variants;
    std::vector<std::string> names;
    std::size_t start = 0;
    while (start <= variants_arg.size()) {
        const std::size_t pos = variants_arg.find(',', start);
        const std::string name = variants_arg.substr(
            start, pos == std::string::npos ? std::string::npos : pos - start);
        if (!name.empty()) {
            TrainConfig cfg = hp.to_config();
            cfg.optimizer = parse_optimizer_kind(name);
            variants.push_back(cfg);
            names.push_back(name);
        }
        if (pos == std::string::npos) break;
        start = pos + 1;
    }
    if (variants.empty()) {
        throw std::runtime_error("compare: no variants requested");
    }

    const InitScheme init{0.0, 0.05, hp.seed};
    const auto rows = compare(variants, *train_set, *val_set, *test_set, init);

    std::cout << "name,final_val_rmse,test_rmse,epochs,seconds\n";
    for (std::size_t v = 0; v < rows.size(); ++v) {
        if (!output.empty()) {
            save_report_file(rows[v].report, output + "." + names[v] + ".csv");
        }
        std::printf("%s,%.10g,%.10g,%d,%.6g\n", names[v].c_str(), rows[v].report.final_val_rmse,
                    rows[v].test_rmse, rows[v].report.epochs_run,
                    rows[v].report.curve.back().seconds);
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Sparse tensor completion by biased latent factorization with PID-refined SGD"};
    app.require_subcommand(1);
    // One config option for every subcommand; keys live in [subcommand]
    // sections. Values fill only options not given on the command line.
    app.set_config("--config", "", "INI/TOML config file with [subcommand] sections");
    int rc = 1;

    // split
    auto* sp = app.add_subcommand("split", "Partition a COO file into train/val/test files");
    sp->fallthrough();
    std::string sp_input, sp_output;
    std::vector<double> sp_ratios{2, 2, 6};
    std::uint64_t sp_seed = 0;
    sp->add_option("--input", sp_input, "COO file (- for stdin)")->required();
    sp->add_option("--output", sp_output, "Output prefix for .train/.val/.test.coo files")
        ->required();
    sp->add_option("--ratios", sp_ratios, "train,val,test ratios")
        ->delimiter(',')
        ->expected(3)
        ->capture_default_str();
    sp->add_option("--seed", sp_seed, "Shuffle seed")->capture_default_str();
    sp->callback([&] { rc = run_split(sp_input, sp_output, sp_ratios, sp_seed); });

    // synth
    auto* sy = app.add_subcommand("synth", "Generate a synthetic low-rank COO file");
    sy->fallthrough();
    std::string sy_output;
    std::vector<Index> sy_shape;
    int sy_rank = 3;
    double sy_density = 0.5, sy_noise = 0.0;
    std::uint64_t sy_seed = 0;
    sy->add_option("--output", sy_output, "Output COO file (- for stdout)")->required();
    sy->add_option("--shape", sy_shape, "I,J,K dimensions")
        ->delimiter(',')
        ->expected(3)
        ->required();
    sy->add_option("--rank", sy_rank, "Ground-truth rank")->capture_default_str();
    sy->add_option("--density", sy_density, "Fraction of observed cells")->capture_default_str();
    sy->add_option("--noise-sd", sy_noise, "Gaussian noise standard deviation")
        ->capture_default_str();
    sy->add_option("--seed", sy_seed, "Generator seed")->capture_default_str();
    sy->callback(
        [&] { rc = run_synth(sy_output, sy_shape, sy_rank, sy_density, sy_noise, sy_seed); });

    // train
    auto* tr = app.add_subcommand("train", "Fit a model and write it with its training report");
    tr->fallthrough();
    HyperFlags tr_hp;
    tr_hp.attach(tr);
    std::string tr_input, tr_val, tr_output, tr_report, tr_train_out, tr_val_out, tr_test_out;
    std::vector<double> tr_ratios{2, 2, 6};
    tr->add_option("--input", tr_input,
                   "Training COO file, or the full file when --val is absent (- for stdin)")
        ->required();
    tr->add_option("--val", tr_val, "Validation COO file; omit to split --input internally");
    tr->add_option("--ratios", tr_ratios, "Internal split ratios")
        ->delimiter(',')
        ->expected(3)
        ->capture_default_str();
    tr->add_option("--output", tr_output, "Model file to write (- for stdout)")->required();
    tr->add_option("--report", tr_report, "Per-epoch report table to write");
    tr->add_option("--train-output", tr_train_out, "Persist the internal train part");
    tr->add_option("--val-output", tr_val_out, "Persist the internal validation part");
    tr->add_option("--test-output", tr_test_out, "Persist the internal test part");
    tr->callback([&] {
        rc = run_train(tr_hp, tr_input, tr_val, tr_ratios, tr_output, tr_report, tr_train_out,
                       tr_val_out, tr_test_out);
    });

    // eval
    auto* ev = app.add_subcommand("eval", "Print the RMSE of a model on a COO file");
    ev->fallthrough();
    std::string ev_model, ev_input;
    ev->add_option("--model", ev_model, "Model file")->required();
    ev->add_option("--input", ev_input, "COO file with held-out entries (- for stdin)")
        ->required();
    ev->callback([&] { rc = run_eval(ev_model, ev_input); });

    // impute
    auto* im = app.add_subcommand("impute", "Predict values for i,j,k queries");
    im->fallthrough();
    std::string im_model, im_input, im_output;
    im->add_option("--model", im_model, "Model file")->required();
    im->add_option("--input", im_input, "Query file with i,j,k lines (- for stdin)")->required();
    im->add_option("--output", im_output, "Predicted values as a COO file (- for stdout)")
        ->required();
    im->callback([&] { rc = run_impute(im_model, im_input, im_output); });

    // compare
    auto* cp = app.add_subcommand("compare", "Train optimizer variants from a shared start");
    cp->fallthrough();
    HyperFlags cp_hp;
    cp_hp.attach(cp);
    std::string cp_input, cp_val, cp_test, cp_output;
    std::string cp_variants = "sgd,pid_linear,pid_nonlinear";
    std::vector<double> cp_ratios{2, 2, 6};
    cp->add_option("--input", cp_input,
                   "Full COO file to split, or the training file with --val/--test")
        ->required();
    cp->add_option("--val", cp_val, "Validation COO file (with --test)");
    cp->add_option("--test", cp_test, "Test COO file (with --val)");
    cp->add_option("--ratios", cp_ratios, "Internal split ratios")
        ->delimiter(',')
        ->expected(3)
        ->capture_default_str();
    cp->add_option("--output", cp_output, "Prefix for per-variant report tables");
    cp->add_option("--variants", cp_variants, "Comma-separated optimizer kinds")
        ->capture_default_str();
    cp->callback([&] {
        rc = run_compare(cp_hp, cp_input, cp_val, cp_test, cp_ratios, cp_output, cp_variants);
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return rc;
}
