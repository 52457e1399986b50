#include "pidlft/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>
#include <ostream>
#include <stdexcept>

#include "pidlft/rng.hpp"
#include "text_util.hpp"

namespace pidlft {

const char* to_string(OptimizerKind kind) {
    switch (kind) {
        case OptimizerKind::sgd: return "sgd";
        case OptimizerKind::pid_linear: return "pid_linear";
        case OptimizerKind::pid_nonlinear: return "pid_nonlinear";
    }
    return "unknown";
}

OptimizerKind parse_optimizer_kind(const std::string& name) {
    if (name == "sgd") return OptimizerKind::sgd;
    if (name == "pid_linear") return OptimizerKind::pid_linear;
    if (name == "pid_nonlinear") return OptimizerKind::pid_nonlinear;
    throw std::invalid_argument("unknown optimizer '" + name +
                                "' (expected sgd, pid_linear or pid_nonlinear)");
}

void TrainConfig::validate() const {
    if (!(eta > 0.0)) throw std::invalid_argument("train config: eta must be > 0");
    if (lambda < 0.0) throw std::invalid_argument("train config: lambda must be >= 0");
    if (rank < 1) throw std::invalid_argument("train config: rank must be >= 1");
    if (max_epochs < 1) throw std::invalid_argument("train config: max_epochs must be >= 1");
    if (!(tol > 0.0)) throw std::invalid_argument("train config: tol must be > 0");
    if (patience < 1) throw std::invalid_argument("train config: patience must be >= 1");
    if (optimizer != OptimizerKind::sgd) gains.validate();
}

double rmse(const Model& m, const SparseTensor& data) {
    const auto& entries = data.entries();
    if (entries.empty()) {
        throw std::invalid_argument("rmse: empty entry set");
    }
    double acc = 0.0;
    for (const Entry& e : entries) {
        const double res = e.value - m.predict(e.i, e.j, e.k);
        acc += res * res;
    }
    return std::sqrt(acc / static_cast<double>(entries.size()));
}

namespace {

void check_fits(const Model& model, const SparseTensor& data, const char* what) {
    const TensorShape& ms = model.shape();
    const TensorShape& ds = data.shape();
    if (ds.n_stations > ms.n_stations || ds.n_metrics > ms.n_metrics || ds.n_slots > ms.n_slots) {
        throw std::invalid_argument(std::string("train: ") + what +
                                    " set does not fit the model shape");
    }
}

}  // namespace

TrainReport train(Model& model, const SparseTensor& train_set, const SparseTensor& val_set,
                  const TrainConfig& cfg) {
    cfg.validate();
    check_fits(model, train_set, "train");
    check_fits(model, val_set, "validation");
    if (model.rank() != cfg.rank) {
        throw std::invalid_argument("train: model rank " + std::to_string(model.rank()) +
                                    " != config rank " + std::to_string(cfg.rank));
    }

    const auto& entries = train_set.entries();
    const std::size_t n = entries.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    SplitMix64 shuffle_rng(cfg.seed);

    const bool use_pid = cfg.optimizer != OptimizerKind::sgd;
    PidGains gains = cfg.gains;
    if (cfg.optimizer == OptimizerKind::pid_linear) {
        gains.alpha_i = 1.0;
        gains.alpha_d = 1.0;
    }
    PidState state(use_pid ? n : 0, cfg.integral_limit);

    TrainReport report;
    report.curve.reserve(static_cast<std::size_t>(cfg.max_epochs));
    double prev_val = 0.0;
    int streak = 0;
    double cum_seconds = 0.0;

    for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
        if (cfg.shuffle) fisher_yates(order, shuffle_rng);

        const auto tic = std::chrono::steady_clock::now();
        if (use_pid) {
            for (const std::size_t idx : order) {
                pid_sgd_step(model, state, idx, entries[idx], cfg.eta, cfg.lambda, gains);
            }
        } else {
            for (const std::size_t idx : order) {
                sgd_step(model, entries[idx], cfg.eta, cfg.lambda);
            }
        }
        const auto toc = std::chrono::steady_clock::now();
        cum_seconds += std::chrono::duration<double>(toc - tic).count();

        const double train_rmse = rmse(model, train_set);
        const double val_rmse = rmse(model, val_set);
        report.curve.push_back(EpochStat{epoch, train_rmse, val_rmse, cum_seconds});

        if (epoch >= 2) {
            streak = (std::abs(val_rmse - prev_val) < cfg.tol) ? streak + 1 : 0;
            if (streak >= cfg.patience) {
                report.converged = true;
                prev_val = val_rmse;
                break;
            }
        }
        prev_val = val_rmse;
    }

    report.epochs_run = static_cast<int>(report.curve.size());
    report.final_val_rmse = report.curve.back().val_rmse;
    return report;
}

void save_report(const TrainReport& report, std::ostream& out) {
    out << "epoch,train_rmse,val_rmse,seconds\n";
    for (const EpochStat& s : report.curve) {
        out << s.epoch << ',' << detail::fmt_g17(s.train_rmse) << ','
            << detail::fmt_g17(s.val_rmse) << ',' << detail::fmt_g17(s.seconds) << '\n';
    }
}

void save_report_file(const TrainReport& report, const std::string& path) {
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("save_report: cannot open '" + path + "'");
    }
    save_report(report, out);
}

namespace {

TensorShape covering_shape(const SparseTensor& x, const SparseTensor& y, const SparseTensor& z) {
    TensorShape s;
    s.n_stations = std::max({x.shape().n_stations, y.shape().n_stations, z.shape().n_stations});
    s.n_metrics = std::max({x.shape().n_metrics, y.shape().n_metrics, z.shape().n_metrics});
    s.n_slots = std::max({x.shape().n_slots, y.shape().n_slots, z.shape().n_slots});
    return s;
}

}  // namespace

std::vector<CompareRow> compare(const std::vector<TrainConfig>& variants,
                                const SparseTensor& train_set, const SparseTensor& val_set,
                                const SparseTensor& test_set, const InitScheme& shared_init) {
    if (variants.empty()) {
        throw std::invalid_argument("compare: need at least one variant");
    }
    const int rank = variants.front().rank;
    for (const TrainConfig& cfg : variants) {
        if (cfg.rank != rank) {
            throw std::invalid_argument("compare: all variants must share the same rank");
        }
    }
    const TensorShape shape = covering_shape(train_set, val_set, test_set);

    std::vector<CompareRow> rows;
    rows.reserve(variants.size());
    for (const TrainConfig& cfg : variants) {
        Model model = Model::init(shape, rank, shared_init);
        CompareRow row;
        row.config = cfg;
        row.report = train(model, train_set, val_set, cfg);
        row.test_rmse = rmse(model, test_set);
        rows.push_back(std::move(row));
    }
    return rows;
}

GridResult grid_search(const SearchGrid& grid, const SparseTensor& train_set,
                       const SparseTensor& val_set, const InitScheme& init) {
    const std::vector<double> etas = grid.etas.empty() ? std::vector<double>{grid.base.eta}
                                                       : grid.etas;
    const std::vector<double> lambdas = grid.lambdas.empty() ? std::vector<double>{grid.base.lambda}
                                                             : grid.lambdas;
    const std::vector<PidGains> gains = grid.gains.empty() ? std::vector<PidGains>{grid.base.gains}
                                                           : grid.gains;

    TensorShape shape;
    shape.n_stations = std::max(train_set.shape().n_stations, val_set.shape().n_stations);
    shape.n_metrics = std::max(train_set.shape().n_metrics, val_set.shape().n_metrics);
    shape.n_slots = std::max(train_set.shape().n_slots, val_set.shape().n_slots);

    GridResult best;
    bool have_best = false;
    for (const double eta : etas) {
        for (const double lambda : lambdas) {
            for (const PidGains& g : gains) {
                TrainConfig cfg = grid.base;
                cfg.eta = eta;
                cfg.lambda = lambda;
                cfg.gains = g;

                double score = std::numeric_limits<double>::infinity();
                int epochs = cfg.max_epochs;
                try {
                    Model model = Model::init(shape, cfg.rank, init);
                    const TrainReport report = train(model, train_set, val_set, cfg);
                    epochs = report.epochs_run;
                    if (std::isfinite(report.final_val_rmse)) {
                        score = report.final_val_rmse;
                    }
                } catch (const DivergenceError&) {
                    // scored +infinity
                }

                const bool better =
                    !have_best || score < best.val_rmse ||
                    (score == best.val_rmse && epochs < best.epochs);
                if (better) {
                    best = GridResult{cfg, score, epochs};
                    have_best = true;
                }
            }
        }
    }
    return best;
}

}  // namespace pidlft
