#pragma once

// Adaptive ODE integration for real-valued state vectors.
//
// The default stepper is the Dormand-Prince 5(4) pair with its continuous
// extension, taken from Boost.Odeint. When its step collapses below
// `min_step_fraction * |t_end - t0|` (or the step budget runs out),
// integrate() restarts from the last
// accepted point with a variable-step BDF2 (implicit, Newton with a
// finite-difference Jacobian), provided `stiff_fallback` is set.

#include <Eigen/Dense>

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "cavens/params.hpp"

namespace cavens::ode {

using State = Eigen::VectorXd;
using Rhs = std::function<void(double t, const State& y, State& dydt)>;

enum class Method { explicit_rk, implicit_bdf };

struct Options {
    double rel_tol = 1e-8;
    double abs_tol = 1e-10;
    double initial_step = 0.0;          // 0: automatic
    double max_step = 0.0;              // 0: unbounded
    double min_step_fraction = 1e-12;   // relative to the integration span
    long max_steps = 20'000'000;
    bool stiff_fallback = true;
    Method method = Method::explicit_rk;
};

struct Stats {
    long accepted = 0;
    long rejected = 0;
    long rhs_evals = 0;
    bool switched_to_implicit = false;
};

struct Trajectory {
    std::vector<double> t;
    std::vector<State> y;
    bool dense_output = true;  // samples interpolated at the requested grid
    Stats stats;
};

/// Step-size collapse or step-count exhaustion.
class StepUnderflow : public NumericalError {
public:
    StepUnderflow(const std::string& what, double time) : NumericalError(what), time_(time) {}
    double time() const { return time_; }

private:
    double time_;
};

/// Explicit Dormand-Prince 5(4) stepper with dense output (Boost.Odeint).
class DormandPrince {
public:
    DormandPrince(Rhs rhs, State y0, double t0, double t_end, const Options& opts);
    ~DormandPrince();
    DormandPrince(const DormandPrince&) = delete;
    DormandPrince& operator=(const DormandPrince&) = delete;

    /// Takes one accepted step. The step may overshoot t_limit; use dense()
    /// for samples. Throws StepUnderflow when the step collapses.
    void step(double t_limit);

    /// Interpolates within the last accepted step [t_prev, t].
    State dense(double t) const;

    double t() const;
    double t_prev() const;
    State y() const;
    const Stats& stats() const { return stats_; }

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
    Stats stats_;
};

/// Variable-step BDF2 with Newton iterations on a finite-difference Jacobian.
class Bdf2 {
public:
    Bdf2(Rhs rhs, State y0, double t0, double t_end, const Options& opts);

    void step(double t_limit);
    State dense(double t) const;  // cubic Hermite over the last accepted step

    double t() const { return t_; }
    const State& y() const { return y_; }
    const Stats& stats() const { return stats_; }

private:
    Eigen::MatrixXd jacobian(double t, const State& y);
    double error_norm(const State& err, const State& y) const;

    Rhs rhs_;
    Options opts_;
    double t_, t_prev_, h_, h_prev_ = 0.0, h_min_;
    State y_, y_prev_, f_, f_prev_;
    bool have_prev_ = false;
    Stats stats_;
};

/// Integrates from times.front() and samples the solution at every entry of
/// `times` (strictly increasing). The first sample is y0 itself.
Trajectory integrate(const Rhs& rhs, const State& y0, const std::vector<double>& times,
                     const Options& opts = {});

/// Convenience: `points` equally spaced samples over [t0, t1].
Trajectory integrate(const Rhs& rhs, const State& y0, double t0, double t1, int points,
                     const Options& opts = {});

}  // namespace cavens::ode
