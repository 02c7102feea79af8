#include "windcal/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <fmt/format.h>
#include <fmt/ranges.h>

namespace windcal {

namespace {

constexpr double kArmijoC1 = 1e-4;
constexpr double kShrink = 0.5;
constexpr int kMaxBacktracks = 60;

double inf_norm(std::span<const double> v) {
	double n = 0.0;
	for (const double x : v) {
		n = std::max(n, std::abs(x));
	}
	return n;
}

double dot(std::span<const double> a, std::span<const double> b) {
	double s = 0.0;
	for (std::size_t i = 0; i < a.size(); ++i) {
		s += a[i] * b[i];
	}
	return s;
}

bool all_finite(std::span<const double> v) {
	return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

class Evaluator {
public:
	explicit Evaluator(const ObjectiveSpec &spec) : spec_(spec) {}

	double value(std::span<const double> x) const { return spec_.evaluate(x, {}); }

	double value_and_gradient(std::span<const double> x, std::vector<double> &grad) const {
		grad.assign(x.size(), 0.0);
		if (spec_.gradient_mode == GradientMode::Analytic) {
			return spec_.evaluate(x, grad);
		}
		grad = finite_difference_gradient(spec_.evaluate, x);
		return value(x);
	}

private:
	const ObjectiveSpec &spec_;
};

} // namespace

std::vector<double> finite_difference_gradient(const Objective &f, std::span<const double> x) {
	std::vector<double> probe(x.begin(), x.end());
	std::vector<double> grad(x.size());
	for (std::size_t i = 0; i < x.size(); ++i) {
		const double h = 1e-6 * (1.0 + std::abs(x[i]));
		probe[i] = x[i] + h;
		const double up = f(probe, {});
		probe[i] = x[i] - h;
		const double down = f(probe, {});
		probe[i] = x[i];
		grad[i] = (up - down) / (2.0 * h);
	}
	return grad;
}

MinimizeResult minimize(const ObjectiveSpec &spec, double tol, std::size_t max_iter) {
	const std::size_t n = spec.dimension;
	if (n == 0 || spec.initial_point.size() != n) {
		throw std::invalid_argument("minimize: initial point must have `dimension` >= 1 entries");
	}
	if (!spec.evaluate) {
		throw std::invalid_argument("minimize: objective callback is empty");
	}
	const Evaluator eval(spec);

	std::vector<double> x = spec.initial_point;
	std::vector<double> g;
	double fx = eval.value_and_gradient(x, g);
	if (!std::isfinite(fx) || !all_finite(g)) {
		throw OptimizationError(fmt::format("objective not finite at initial point [{}]", fmt::join(x, ", ")), x);
	}

	MinimizeResult result;
	result.accepted_values.push_back(fx);

	// Inverse Hessian approximation, row-major.
	std::vector<double> h_inv(n * n, 0.0);
	for (std::size_t i = 0; i < n; ++i) {
		h_inv[i * n + i] = 1.0;
	}
	bool scaled = false;

	std::vector<double> dir(n), x_new(n), g_new(n), s(n), y(n), hy(n);
	std::size_t iter = 0;
	bool converged = inf_norm(g) < tol;
	while (!converged && iter < max_iter) {
		++iter;
		for (std::size_t i = 0; i < n; ++i) {
			double acc = 0.0;
			for (std::size_t j = 0; j < n; ++j) {
				acc -= h_inv[i * n + j] * g[j];
			}
			dir[i] = acc;
		}
		double slope = dot(g, dir);
		if (!(slope < 0.0)) {
			// Not a descent direction: restart from steepest descent.
			std::fill(h_inv.begin(), h_inv.end(), 0.0);
			for (std::size_t i = 0; i < n; ++i) {
				h_inv[i * n + i] = 1.0;
				dir[i] = -g[i];
			}
			slope = -dot(g, g);
		}

		double step = 1.0;
		double f_new = std::numeric_limits<double>::infinity();
		bool accepted = false;
		bool saw_finite = false;
		for (int k = 0; k < kMaxBacktracks; ++k) {
			for (std::size_t i = 0; i < n; ++i) {
				x_new[i] = x[i] + step * dir[i];
			}
			f_new = eval.value(x_new);
			if (std::isfinite(f_new)) {
				saw_finite = true;
				if (f_new <= fx + kArmijoC1 * step * slope) {
					accepted = true;
					break;
				}
			}
			step *= kShrink;
		}
		if (!accepted) {
			if (!saw_finite) {
				throw OptimizationError(
				    fmt::format("objective non-finite along search direction from [{}]", fmt::join(x, ", ")), x);
			}
			break;
		}

		const double f_checked = eval.value_and_gradient(x_new, g_new);
		if (!all_finite(g_new)) {
			break;
		}
		for (std::size_t i = 0; i < n; ++i) {
			s[i] = x_new[i] - x[i];
			y[i] = g_new[i] - g[i];
		}
		const double sy = dot(s, y);
		if (sy > 1e-12 * std::sqrt(dot(s, s) * dot(y, y))) {
			if (!scaled) {
				const double gamma = sy / dot(y, y);
				for (std::size_t i = 0; i < n; ++i) {
					for (std::size_t j = 0; j < n; ++j) {
						h_inv[i * n + j] = (i == j) ? gamma : 0.0;
					}
				}
				scaled = true;
			}
			// H <- (I - rho s y^T) H (I - rho y s^T) + rho s s^T
			const double rho = 1.0 / sy;
			for (std::size_t i = 0; i < n; ++i) {
				double acc = 0.0;
				for (std::size_t j = 0; j < n; ++j) {
					acc += h_inv[i * n + j] * y[j];
				}
				hy[i] = acc;
			}
			const double yhy = dot(y, hy);
			for (std::size_t i = 0; i < n; ++i) {
				for (std::size_t j = 0; j < n; ++j) {
					h_inv[i * n + j] += rho * ((1.0 + rho * yhy) * s[i] * s[j] - hy[i] * s[j] - s[i] * hy[j]);
				}
			}
		}

		x = x_new;
		g = g_new;
		fx = f_checked;
		result.accepted_values.push_back(fx);
		converged = inf_norm(g) < tol;
	}

	result.point = std::move(x);
	result.value = fx;
	result.converged = converged;
	result.iterations = iter;
	result.gradient_norm = inf_norm(g);
	return result;
}

} // namespace windcal
