#include "cavens/ode.hpp"

#include <boost/numeric/odeint.hpp>
#include <boost/numeric/odeint/external/eigen/eigen.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace cavens::ode {

namespace {

double check_span(double t0, double t_end) {
    const double span = std::abs(t_end - t0);
    if (!(span > 0.0) || !std::isfinite(span)) throw ConfigError("ode: empty or non-finite time span");
    return span;
}

void require_finite(const State& y, const char* where) {
    if (!y.allFinite()) throw ConfigError(std::string(where) + ": non-finite state");
}

}  // namespace

// ---------------------------------------------------------------- DormandPrince

namespace {
namespace odeint = boost::numeric::odeint;
using DopriStepper = odeint::runge_kutta_dopri5<State, double, State, double, odeint::vector_space_algebra>;
using DenseStepper = odeint::result_of::make_dense_output<DopriStepper>::type;
}  // namespace

struct DormandPrince::Impl {
    DenseStepper stepper;
    std::function<void(const State&, State&, double)> system;
    double h_min = 0.0;
    double span = 0.0;
    long max_steps = 0;
};

DormandPrince::DormandPrince(Rhs rhs, State y0, double t0, double t_end, const Options& opts)
    : impl_(std::make_unique<Impl>()) {
    require_finite(y0, "DormandPrince");
    impl_->span = check_span(t0, t_end);
    impl_->h_min = opts.min_step_fraction * impl_->span;
    impl_->max_steps = opts.max_steps;
    const double max_dt = opts.max_step > 0.0 ? opts.max_step : impl_->span;
    impl_->stepper = odeint::make_dense_output(opts.abs_tol, opts.rel_tol, max_dt, DopriStepper());
    impl_->system = [rhs = std::move(rhs), this](const State& y, State& dydt, double t) {
        dydt.resize(y.size());
        rhs(t, y, dydt);
        ++stats_.rhs_evals;
    };
    double h0 = opts.initial_step;
    if (!(h0 > 0.0)) {
        // First step ~1% of the time the initial rate needs to change the state appreciably.
        State f0(y0.size());
        impl_->system(y0, f0, t0);
        const double ynorm = std::max(y0.lpNorm<Eigen::Infinity>(), opts.abs_tol / opts.rel_tol);
        const double rate = f0.lpNorm<Eigen::Infinity>();
        h0 = rate > 0.0 ? 0.01 * ynorm / rate : 1e-6 * impl_->span;
        h0 = std::clamp(h0, 10.0 * impl_->h_min, 0.01 * impl_->span);
    }
    impl_->stepper.initialize(y0, t0, h0);
}

DormandPrince::~DormandPrince() = default;

void DormandPrince::step(double /*t_limit*/) {
    auto& st = impl_->stepper;
    if (stats_.accepted >= impl_->max_steps) {
        std::ostringstream os;
        os << "DormandPrince: step budget exhausted at t=" << st.current_time();
        throw StepUnderflow(os.str(), st.current_time());
    }
    try {
        st.do_step(std::ref(impl_->system));
    } catch (const odeint::step_adjustment_error& e) {
        throw StepUnderflow(std::string("DormandPrince: ") + e.what(), st.current_time());
    }
    ++stats_.accepted;
    if (!st.current_state().allFinite())
        throw StepUnderflow("DormandPrince: non-finite state", st.previous_time());
    const double h = st.current_time() - st.previous_time();
    if (st.current_time_step() < impl_->h_min && h < impl_->h_min) {
        std::ostringstream os;
        os << "DormandPrince: step size underflow (h=" << st.current_time_step() << ") at t=" << st.current_time();
        throw StepUnderflow(os.str(), st.current_time());
    }
}

State DormandPrince::dense(double t) const {
    State out(impl_->stepper.current_state().size());
    impl_->stepper.calc_state(t, out);
    return out;
}

double DormandPrince::t() const { return impl_->stepper.current_time(); }
double DormandPrince::t_prev() const { return impl_->stepper.previous_time(); }
State DormandPrince::y() const { return impl_->stepper.current_state(); }

// ---------------------------------------------------------------- Bdf2

Bdf2::Bdf2(Rhs rhs, State y0, double t0, double t_end, const Options& opts)
    : rhs_(std::move(rhs)), opts_(opts), t_(t0), t_prev_(t0) {
    require_finite(y0, "Bdf2");
    const double span = check_span(t0, t_end);
    h_min_ = opts_.min_step_fraction * span;
    y_ = std::move(y0);
    y_prev_ = y_;
    f_.setZero(y_.size());
    rhs_(t_, y_, f_);
    ++stats_.rhs_evals;
    h_ = opts_.initial_step > 0.0 ? opts_.initial_step : std::min(1e-6 * span, 1e-3);
    if (opts_.max_step > 0.0) h_ = std::min(h_, opts_.max_step);
}

double Bdf2::error_norm(const State& err, const State& y) const {
    const auto n = err.size();
    if (n == 0) return 0.0;
    const Eigen::ArrayXd sk = opts_.abs_tol + opts_.rel_tol * y.array().abs();
    return std::sqrt((err.array() / sk).square().sum() / static_cast<double>(n));
}

Eigen::MatrixXd Bdf2::jacobian(double t, const State& y) {
    const auto n = y.size();
    Eigen::MatrixXd J(n, n);
    State f0(n), f1(n), yp = y;
    rhs_(t, y, f0);
    const double sq = std::sqrt(std::numeric_limits<double>::epsilon());
    for (Eigen::Index j = 0; j < n; ++j) {
        const double dy = sq * std::max(std::abs(y[j]), opts_.abs_tol / std::max(opts_.rel_tol, 1e-16));
        yp[j] = y[j] + dy;
        rhs_(t, yp, f1);
        J.col(j) = (f1 - f0) / dy;
        yp[j] = y[j];
    }
    stats_.rhs_evals += n + 1;
    return J;
}

void Bdf2::step(double t_limit) {
    const double hmax = opts_.max_step > 0.0 ? opts_.max_step : std::numeric_limits<double>::infinity();
    const auto n = y_.size();
    Eigen::MatrixXd Jf = jacobian(t_, y_);
    for (;;) {
        if (stats_.accepted + stats_.rejected >= opts_.max_steps)
            throw StepUnderflow("Bdf2: step budget exhausted", t_);
        const double remaining = t_limit - t_;
        double h = std::min({h_, hmax, remaining});
        if (h < h_min_ && remaining > h_min_) {
            std::ostringstream os;
            os << "Bdf2: step size underflow (h=" << h << ") at t=" << t_;
            throw StepUnderflow(os.str(), t_);
        }

        // y_new = base + h*beta*f(y_new)
        double beta;
        State base;
        if (have_prev_) {
            const double om = h / h_prev_;
            const double d = 1.0 + 2.0 * om;
            base = ((1.0 + om) * (1.0 + om) / d) * y_ - (om * om / d) * y_prev_;
            beta = (1.0 + om) / d;
        } else {
            base = y_;
            beta = 1.0;
        }

        State y_new = y_ + h * f_;  // explicit Euler start
        Eigen::PartialPivLU<Eigen::MatrixXd> lu(Eigen::MatrixXd::Identity(n, n) - h * beta * Jf);
        State fy(n);
        bool converged = false;
        for (int it = 0; it < 10; ++it) {
            rhs_(t_ + h, y_new, fy);
            ++stats_.rhs_evals;
            State delta = lu.solve(-(y_new - base - h * beta * fy));
            y_new += delta;
            if (!y_new.allFinite()) break;
            if (error_norm(delta, y_new) < 1e-3) {
                converged = true;
                break;
            }
        }
        if (!converged) {
            ++stats_.rejected;
            h_ = 0.25 * h;
            Jf = jacobian(t_, y_);
            continue;
        }
        rhs_(t_ + h, y_new, fy);
        ++stats_.rhs_evals;

        State err;
        double order;
        if (have_prev_) {
            // Milne's device against a Hermite predictor through y_prev, y, f.
            const double hp = h_prev_;
            State c = (y_prev_ - y_ + f_ * hp) / (hp * hp);
            State pred = y_ + f_ * h + c * h * h;
            err = 0.4 * (y_new - pred);
            order = 3.0;
        } else {
            err = 0.5 * h * (fy - f_);
            order = 2.0;
        }
        const double en = error_norm(err, y_new);
        if (en <= 1.0) {
            y_prev_ = y_;
            t_prev_ = t_;
            y_ = y_new;
            f_prev_ = f_;
            f_ = fy;
            t_ = (h == remaining) ? t_limit : t_ + h;
            h_prev_ = h;
            have_prev_ = true;
            const double fac = std::clamp(0.9 * std::pow(std::max(en, 1e-10), -1.0 / order), 0.2, 5.0);
            h_ = h * fac;
            ++stats_.accepted;
            return;
        }
        ++stats_.rejected;
        h_ = h * std::max(0.2, 0.9 * std::pow(en, -1.0 / order));
    }
}

State Bdf2::dense(double t) const {
    const double h = t_ - t_prev_;
    if (h == 0.0) return y_;
    // cubic Hermite on [t_prev, t]
    const double s = (t - t_prev_) / h;
    const double h00 = (1 + 2 * s) * (1 - s) * (1 - s), h10 = s * (1 - s) * (1 - s);
    const double h01 = s * s * (3 - 2 * s), h11 = s * s * (s - 1);
    return h00 * y_prev_ + h10 * h * f_prev_ + h01 * y_ + h11 * h * f_;
}

// ---------------------------------------------------------------- integrate

Trajectory integrate(const Rhs& rhs, const State& y0, const std::vector<double>& times, const Options& opts) {
    if (times.size() < 2) throw ConfigError("integrate: need at least two output times");
    for (std::size_t i = 1; i < times.size(); ++i)
        if (!(times[i] > times[i - 1])) throw ConfigError("integrate: output times must be strictly increasing");
    require_finite(y0, "integrate");

    Trajectory traj;
    traj.t = times;
    traj.y.reserve(times.size());
    traj.y.push_back(y0);
    const double t_end = times.back();
    std::size_t next = 1;

    auto run_implicit = [&](const State& y_start, double t_start) {
        Bdf2 bdf(rhs, y_start, t_start, t_end, opts);
        while (next < times.size()) {
            bdf.step(t_end);
            while (next < times.size() && times[next] <= bdf.t()) traj.y.push_back(bdf.dense(times[next++]));
        }
        traj.stats.accepted += bdf.stats().accepted;
        traj.stats.rejected += bdf.stats().rejected;
        traj.stats.rhs_evals += bdf.stats().rhs_evals;
    };

    if (opts.method == Method::implicit_bdf) {
        run_implicit(y0, times.front());
        return traj;
    }

    DormandPrince dp(rhs, y0, times.front(), t_end, opts);
    try {
        while (next < times.size()) {
            dp.step(t_end);
            while (next < times.size() && times[next] <= dp.t()) traj.y.push_back(dp.dense(times[next++]));
        }
    } catch (const StepUnderflow&) {
        if (!opts.stiff_fallback) throw;
        traj.stats.switched_to_implicit = true;
    }
    traj.stats.accepted += dp.stats().accepted;
    traj.stats.rejected += dp.stats().rejected;
    traj.stats.rhs_evals += dp.stats().rhs_evals;
    if (traj.stats.switched_to_implicit && next < times.size()) run_implicit(dp.y(), dp.t());
    return traj;
}

Trajectory integrate(const Rhs& rhs, const State& y0, double t0, double t1, int points, const Options& opts) {
    if (points < 2) throw ConfigError("integrate: need at least two points");
    std::vector<double> times(static_cast<std::size_t>(points));
    for (int i = 0; i < points; ++i) times[static_cast<std::size_t>(i)] = t0 + (t1 - t0) * i / (points - 1);
    times.back() = t1;
    return integrate(rhs, y0, times, opts);
}

}  // namespace cavens::ode
