#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

#include "pidlft/model.hpp"
#include "pidlft/sparse_tensor.hpp"

namespace pidlft {

// Raised when a step leaves a parameter non-finite.
struct DivergenceError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Controller constants. alpha = 1 is the linear controller.
struct PidGains {
    double k_p = 1.0;
    double k_i = 0.0;
    double k_d = 0.0;
    double alpha_i = 0.5;
    double alpha_d = 0.5;

    void validate() const;  // alpha_i, alpha_d in (0, 1]
};

// Per-training-entry error history: running integral and previous error,
// keyed by the entry's slot in the training set. The integral is clamped to
// [-integral_limit, integral_limit] to bound windup; pass infinity to
// disable clamping.
struct PidState {
    explicit PidState(std::size_t n_entries, double limit = 1e4);

    void reset();
    std::size_t size() const { return integral.size(); }

    std::vector<double> integral;
    std::vector<double> prev_error;
    double integral_limit = 1e4;
};

// |x|^alpha with the sign of x; odd, with f(x, 1) = x exactly.
double nonlinear_map(double x, double alpha);

// y_ijk - prediction.
double instant_error(const Model& m, const Entry& e);

// PID-refined error for one visit:
//   k_p * e + k_i * f(integral + e, alpha_i) + k_d * f(e - prev, alpha_d)
// Updates the slot's integral and previous error as a side effect. A slot's
// first visit sees prev = 0.
double refined_error(PidState& state, std::size_t slot, double e_now, const PidGains& gains);

// One plain SGD update on the six parameter groups touched by the entry.
// The error and every gradient product use pre-update values.
void sgd_step(Model& m, const Entry& e, double eta, double lambda);

// Same update shape with the refined error in place of the raw one.
void pid_sgd_step(Model& m, PidState& state, std::size_t slot, const Entry& e,
                  double eta, double lambda, const PidGains& gains);

}  // namespace pidlft
