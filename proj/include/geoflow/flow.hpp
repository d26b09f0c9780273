#pragma once

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "geoflow/fields.hpp"
#include "geoflow/geometry.hpp"

namespace geoflow {

/// f(t) = 1 + lambda t - mu t^2 / 2, so f(0) = 1, f'(0) = lambda, f''(0) = -mu.
struct FSchedule {
    double lambda = 0.0;
    double mu = 0.0;
    double operator()(double t) const { return 1.0 + lambda * t - 0.5 * mu * t * t; }
    /// min of f over [a, b].
    double minimum(double a, double b) const;
};

/// Largest RK4 step used by flow_map.
inline constexpr double kFlowMapStep = 1e-3;

struct FlowMapResult {
    std::vector<double> source;
    std::vector<double> image;
    std::vector<double> jacobian;  // [i*n + j] = d phi^i / d x^j
    double t = 0.0;
    double f = 1.0;                // f(t)
    int steps = 0;
};

/// Flow of zeta(s) = zeta(x) / f(s) from s = 0 to s = t (t may be negative), RK4 on the
/// state and on the variational equation dJ/ds = D zeta(x(s)) J / f(s). Throws
/// PreconditionError when the trajectory leaves the sampling box along a non-periodic
/// axis or f is not positive on the time interval.
FlowMapResult flow_map(const VectorField& zeta, const FSchedule& f, double t, std::span<const double> x);

/// f(t) J^T g0(phi_t(x)) J at the source point.
SymTensorValue pullback_metric(const MetricField& g0, const FlowMapResult& m);

struct FlowFamilySpec {
    const MetricField* g0 = nullptr;
    const VectorField* zeta = nullptr;
    FSchedule f;
    double h = 1e-3;
};

/// (g(h) - 2 g(0) + g(-h)) / h^2 + r(g0) g0 at x for g(t) = f(t) phi_t^* g0. Throws
/// PreconditionError unless h is in [1e-4, 1e-2] and f > 0 on [-2h, 2h].
SymTensorValue family_second_derivative_residual(const FlowFamilySpec& spec, std::span<const double> x);

struct FamilyLadderRung {
    double h = 0.0;
    double residual = 0.0;  // sup-norm
    double ratio = 0.0;     // residual of the previous rung over this one; 0 on the first rung
};

/// Residual sup-norms for h, h/2, ..., `rungs` values in all.
std::vector<FamilyLadderRung> family_residual_ladder(const FlowFamilySpec& spec, std::span<const double> x,
                                                     int rungs);

/// phi(t) = phi0 + v0 t - r0 t^2 / 2, the conformal factor of g(t) = phi(t) g0 when g0 has
/// constant scalar curvature r0. Throws PreconditionError if phi is not positive on [0, t].
double conformal_flow_exact(double r0, double phi0, double v0, double t);

struct GridSpec {
    int dim = 2;
    std::vector<int> points;      // per axis, >= 16
    std::vector<double> period;   // per axis
    int stencil_order = 4;
    double dt = 1e-3;
    double final_time = 1.0;
    /// Record every this many steps; 0 records only the initial and final states.
    int output_every = 0;

    std::size_t node_count() const;
    double spacing(int axis) const { return period[static_cast<std::size_t>(axis)] / points[static_cast<std::size_t>(axis)]; }
    double min_spacing() const;
    /// Coordinates of a node; axis 0 varies fastest.
    std::vector<double> node_point(std::size_t node) const;
    void validate() const;
};

/// Safety factor of the stability guard dt <= factor * h / (1 + max sqrt|r|).
inline constexpr double kStabilityFactor = 0.25;
/// Relative degeneration threshold on |det g| against the initial determinant.
inline constexpr double kDegenerationRatio = 1e-8;

struct FlowState {
    double t = 0.0;
    int n = 0;
    std::vector<double> metric;    // node-major, n*n per node
    std::vector<double> velocity;  // same layout, dg/dt

    std::size_t nodes() const { return n == 0 ? 0 : metric.size() / static_cast<std::size_t>(n * n); }
    std::span<const double> metric_at(std::size_t node) const {
        return {metric.data() + node * static_cast<std::size_t>(n * n), static_cast<std::size_t>(n * n)};
    }
};

/// Samples g0 and a velocity at the grid nodes. The velocity is `velocity_scale` * g0
/// plus the optional expression components (row-major n*n); the chart must be a fully
/// periodic chart with the grid's periods.
FlowState grid_initial_state(const GridSpec& grid, const MetricField& g0, double velocity_scale = 0.0,
                             const std::vector<Expr>& velocity = {});

/// Homogeneous reduction: one node carrying phi g0 with r(phi g0) = r0 / phi.
struct HomogeneousSpec {
    double r0 = 2.0;
    double phi0 = 1.0;
    double v0 = 0.0;
    std::vector<double> g0;  // n*n, defaults to the identity of dimension `dim`
    int dim = 2;
    double dt = 1e-2;
    double final_time = 0.5;
    int output_every = 0;
};

enum class Termination { Completed, Degenerated, Unstable };
std::string to_string(Termination t);

struct FlowDiagnostics {
    double t = 0.0;
    double min_det = 0.0;  // min over nodes of |det g|
    double max_abs_r = 0.0;
    double energy = 0.0;   // sum over nodes of g(dg/dt, dg/dt) sqrt|det g| * cell volume
};

struct FlowTrajectory {
    std::vector<FlowState> states;
    std::vector<FlowDiagnostics> diagnostics;  // one per recorded state
    Termination termination = Termination::Completed;
    std::string event;                         // message for degeneration or instability
    double end_time = 0.0;                     // time of the last completed step
    long steps = 0;
    double initial_det = 0.0;                  // min |det g| at t = 0
};

/// Three-level leapfrog g_{k+1} = 2 g_k - g_{k-1} - dt^2 r(g_k) g_k. Steps can be run
/// forward and then backward by reverse(); the scheme is symmetric, so the reversed run
/// retraces the forward one up to round-off.
class LeapfrogIntegrator {
public:
    LeapfrogIntegrator(const GridSpec& grid, FlowState initial);
    LeapfrogIntegrator(const HomogeneousSpec& spec);

    /// Advances one step. Returns false (and sets termination) on degeneration or instability.
    bool step();
    /// Swaps the two time levels so that subsequent steps run backward in time.
    void reverse();

    double time() const { return t_; }
    double dt() const { return dt_; }
    int dim() const { return n_; }
    std::size_t nodes() const { return nodes_; }
    const std::vector<double>& current() const { return cur_; }
    const std::vector<double>& previous() const { return prev_; }
    Termination termination() const { return termination_; }
    const std::string& event() const { return event_; }
    double initial_det() const { return det0_; }

    /// Scalar curvature per node of the current level.
    const std::vector<double>& scalar_curvature() const { return r_; }
    /// Snapshot with velocity (g_{k+1} - g_{k-1}) / (2 dt) from a trial step.
    FlowState snapshot() const;
    /// Diagnostics of a snapshot of the current level.
    FlowDiagnostics diagnostics(const FlowState& s) const;
    /// kStabilityFactor * min spacing / (1 + max sqrt|r|); the spacing is 1 in homogeneous mode.
    double stability_bound(const std::vector<double>& r) const;

private:
    void initialize(const std::vector<double>& velocity);
    void compute_curvature(const std::vector<double>& g, std::vector<double>& r) const;
    void advance(const std::vector<double>& prev, const std::vector<double>& cur, const std::vector<double>& r,
                 std::vector<double>& next) const;

    std::optional<GridSpec> grid_;
    std::optional<HomogeneousSpec> homogeneous_;
    int n_ = 0;
    std::size_t nodes_ = 0;
    double dt_ = 0.0;
    double t_ = 0.0;
    double direction_ = 1.0;
    double spacing_ = 1.0;
    double cell_ = 1.0;
    double det0_ = 0.0;
    std::vector<double> det0_nodes_;
    double g_scale0_ = 0.0;
    std::vector<double> g0_inverse_;
    std::vector<double> prev_, cur_, r_;
    Termination termination_ = Termination::Completed;
    std::string event_;
};

FlowTrajectory grid_flow_run(const GridSpec& grid, const FlowState& initial);
FlowTrajectory grid_flow_run(const HomogeneousSpec& spec);

/// phi with metric = phi g0 in homogeneous mode, as tr(g0^{-1} metric) / n.
double homogeneous_factor(const HomogeneousSpec& spec, std::span<const double> metric);

/// Runs the homogeneous flow for each dt and compares phi(final_time) with the closed form.
struct ConvergenceRung {
    double dt = 0.0;
    double phi = 0.0;
    double error = 0.0;
    double order = 0.0;  // log2(previous error / error); 0 on the first rung
};
std::vector<ConvergenceRung> homogeneous_convergence(HomogeneousSpec spec, const std::vector<double>& dts);

/// CSV with header t,node,i,j,value, one row per recorded state, node and component i <= j.
void write_trajectory_csv(const FlowTrajectory& traj, std::ostream& out);
nlohmann::json trajectory_summary(const FlowTrajectory& traj);

}  // namespace geoflow
