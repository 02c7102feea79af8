#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

namespace windcal {

enum class GradientMode { Analytic, FiniteDifference };

/// Objective callback. Returns f(x); when `grad` is non-empty it must also be filled with df/dx.
/// In FiniteDifference mode the callback is only ever called with an empty gradient span.
using Objective = std::function<double(std::span<const double> x, std::span<double> grad)>;

struct ObjectiveSpec {
	std::size_t dimension = 0;
	Objective evaluate;
	std::vector<double> initial_point;
	GradientMode gradient_mode = GradientMode::FiniteDifference;
};

struct MinimizeResult {
	std::vector<double> point;
	double value = 0.0;
	bool converged = false;
	std::size_t iterations = 0;
	double gradient_norm = 0.0; // infinity norm at `point`
	/// Objective value at the start point followed by the value after each accepted step.
	std::vector<double> accepted_values;
};

/// Thrown when the objective stays non-finite along the whole backtracking path.
class OptimizationError : public std::runtime_error {
public:
	OptimizationError(const std::string &what, std::vector<double> point)
	    : std::runtime_error(what), point_(std::move(point)) {}
	const std::vector<double> &point() const noexcept { return point_; }

private:
	std::vector<double> point_;
};

/// Central differences with step h = 1e-6 * (1 + |x_i|).
std::vector<double> finite_difference_gradient(const Objective &f, std::span<const double> x);

/**
 * BFGS quasi-Newton minimization with a backtracking Armijo line search
 * (sufficient decrease c1 = 1e-4, step shrink 0.5).
 *
 * Terminates with converged = true once the gradient infinity-norm drops below `tol`. When the line
 * search cannot make progress the best point found is returned with converged = false.
 */
MinimizeResult minimize(const ObjectiveSpec &spec, double tol = 1e-8, std::size_t max_iter = 200);

} // namespace windcal
