#pragma once

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <string>
#include <vector>

#include "pidlft/model.hpp"
#include "pidlft/optimizer.hpp"
#include "pidlft/sparse_tensor.hpp"

namespace pidlft {

enum class OptimizerKind { sgd, pid_linear, pid_nonlinear };

const char* to_string(OptimizerKind kind);
OptimizerKind parse_optimizer_kind(const std::string& name);

struct TrainConfig {
    double eta = 0.01;
    double lambda = 0.0;
    int rank = 10;
    PidGains gains{};
    int max_epochs = 500;
    double tol = 1e-5;
    int patience = 5;
    bool shuffle = true;
    std::uint64_t seed = 0;
    OptimizerKind optimizer = OptimizerKind::sgd;
    double integral_limit = 1e4;

    void validate() const;
};

struct EpochStat {
    int epoch = 0;  // 1-based
    double train_rmse = 0.0;
    double val_rmse = 0.0;
    double seconds = 0.0;  // cumulative step-loop wall time
};

struct TrainReport {
    int epochs_run = 0;
    bool converged = false;
    std::vector<EpochStat> curve;
    double final_val_rmse = std::numeric_limits<double>::quiet_NaN();
};

// Root mean squared residual over the given entries.
double rmse(const Model& m, const SparseTensor& data);

// Runs epochs over train_set (seeded per-epoch reshuffle unless disabled),
// evaluating validation RMSE after each epoch. Stops at max_epochs, or
// earlier once |val_n - val_{n-1}| < tol holds for `patience` consecutive
// epochs (converged=true only then). Deterministic given config, data and
// the initial model; wall time covers the step loop only.
TrainReport train(Model& model, const SparseTensor& train_set, const SparseTensor& val_set,
                  const TrainConfig& cfg);

// Report table: `epoch,train_rmse,val_rmse,seconds` with a header line.
void save_report(const TrainReport& report, std::ostream& out);
void save_report_file(const TrainReport& report, const std::string& path);

struct CompareRow {
    TrainConfig config;
    TrainReport report;
    double test_rmse = std::numeric_limits<double>::quiet_NaN();
};

// Trains every variant from an identical initial model (same InitScheme) on
// identical data. All variants must share the same rank.
std::vector<CompareRow> compare(const std::vector<TrainConfig>& variants,
                                const SparseTensor& train_set, const SparseTensor& val_set,
                                const SparseTensor& test_set, const InitScheme& shared_init);

// Candidate lists for an exhaustive search; an empty list means "use the
// base config's value". Combinations are visited etas (outer) x lambdas x
// gains (inner).
struct SearchGrid {
    std::vector<double> etas;
    std::vector<double> lambdas;
    std::vector<PidGains> gains;
    TrainConfig base{};
};

struct GridResult {
    TrainConfig config;
    double val_rmse = std::numeric_limits<double>::infinity();
    int epochs = 0;
};

// Trains each combination from a fresh init and returns the argmin of final
// validation RMSE; diverged runs score +infinity. Ties break by fewer
// epochs, then by visit order.
GridResult grid_search(const SearchGrid& grid, const SparseTensor& train_set,
                       const SparseTensor& val_set, const InitScheme& init);

}  // namespace pidlft
