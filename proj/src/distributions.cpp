#include "windcal/distributions.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

#include <boost/math/special_functions/gamma.hpp>

namespace windcal {

namespace {

constexpr double kInvSqrtPi = 0.56418958354775628695; // 1/sqrt(pi)

// Below this standardized location the truncated normal is replaced by its exponential limit;
// the relative error of the limit is of order (sigma/mu)^2.
constexpr double kTruncatedTailCutoff = -1e4;

// log Phi(x), accurate far into the lower tail where Phi itself underflows.
double log_std_normal_cdf(double x) {
	if (x > -30.0) {
		return std::log(std_normal_cdf(x));
	}
	// Asymptotic series of the Mills ratio.
	const double r = 1.0 / (x * x);
	const double series =
	    1.0 - r * (1.0 - 3.0 * r * (1.0 - 5.0 * r * (1.0 - 7.0 * r * (1.0 - 9.0 * r * (1.0 - 11.0 * r)))));
	return -0.5 * x * x - std::log(-x) - 0.5 * std::log(2.0 * std::numbers::pi) + std::log(series);
}

double exponential_rate(const PredictiveDistribution &d) {
	return -d.location() / (d.scale() * d.scale());
}

double gamma_p(double shape, double x) {
	if (x <= 0.0) {
		return 0.0;
	}
	return boost::math::gamma_p(shape, x);
}

double crps_normal(double mu, double sigma, double y) {
	const double z = (y - mu) / sigma;
	return sigma * (z * (2.0 * std_normal_cdf(z) - 1.0) + 2.0 * std_normal_pdf(z) - kInvSqrtPi);
}

// Zero-truncated normal, observation y >= 0.
double crps_truncated_normal(double mu, double sigma, double y) {
	const double ratio = mu / sigma;
	if (ratio < kTruncatedTailCutoff) {
		const double rate = -mu / (sigma * sigma);
		return y + 2.0 * std::exp(-rate * y) / rate - 1.5 / rate;
	}
	const double z = (y - mu) / sigma;
	if (ratio < -3.0) {
		// Same expression divided through by p, with the small ratios formed in log space.
		const double log_p = log_std_normal_cdf(ratio);
		const double upper = std::exp(log_std_normal_cdf(-z) - log_p);
		const double density = std::exp(-0.5 * z * z - 0.5 * std::log(2.0 * std::numbers::pi) - log_p);
		const double tail = kInvSqrtPi * std::exp(log_std_normal_cdf(std::numbers::sqrt2 * ratio) - 2.0 * log_p);
		return sigma * (z * (1.0 - 2.0 * upper) + 2.0 * density - tail);
	}
	const double p = std_normal_cdf(ratio);
	const double bracket = z * p * (2.0 * std_normal_cdf(z) + p - 2.0) + 2.0 * std_normal_pdf(z) * p -
	                       kInvSqrtPi * std_normal_cdf(std::numbers::sqrt2 * ratio);
	return sigma * bracket / (p * p);
}

// Gamma with shape/rate, observation y >= 0.
double crps_gamma(double shape, double rate, double y) {
	const double x = rate * y;
	const double log_beta = std::lgamma(0.5) + std::lgamma(shape) - std::lgamma(shape + 0.5);
	return y * (2.0 * gamma_p(shape, x) - 1.0) - (shape / rate) * (2.0 * gamma_p(shape + 1.0, x) - 1.0) -
	       std::exp(-log_beta) / rate;
}

} // namespace

std::string_view to_string(DistKind kind) {
	switch (kind) {
	case DistKind::Normal:
		return "normal";
	case DistKind::TruncatedNormalAtZero:
		return "truncated_normal";
	case DistKind::Gamma:
		return "gamma";
	}
	return "unknown";
}

DistKind parse_dist_kind(std::string_view name) {
	if (name == "normal") {
		return DistKind::Normal;
	}
	if (name == "truncated_normal" || name == "tnormal") {
		return DistKind::TruncatedNormalAtZero;
	}
	if (name == "gamma") {
		return DistKind::Gamma;
	}
	throw std::invalid_argument("unknown distribution kind '" + std::string(name) + "'");
}

PredictiveDistribution::PredictiveDistribution(DistKind kind, double location, double scale)
    : kind_(kind), location_(location), scale_(scale) {
	if (!(scale > 0.0) || !std::isfinite(scale)) {
		throw std::invalid_argument("PredictiveDistribution: scale must be finite and > 0");
	}
	if (!std::isfinite(location)) {
		throw std::invalid_argument("PredictiveDistribution: location must be finite");
	}
	if (kind == DistKind::Gamma && !(location > 0.0)) {
		throw std::invalid_argument("PredictiveDistribution: gamma mean must be > 0");
	}
}

double std_normal_pdf(double z) {
	return std::exp(-0.5 * z * z) * 0.39894228040143267794;
}

double std_normal_cdf(double z) {
	return 0.5 * std::erfc(-z / std::numbers::sqrt2);
}

double pdf(const PredictiveDistribution &d, double y) {
	switch (d.kind()) {
	case DistKind::Normal:
		return std_normal_pdf((y - d.location()) / d.scale()) / d.scale();
	case DistKind::TruncatedNormalAtZero: {
		if (y < 0.0) {
			return 0.0;
		}
		const double ratio = d.location() / d.scale();
		if (ratio < kTruncatedTailCutoff) {
			const double rate = exponential_rate(d);
			return rate * std::exp(-rate * y);
		}
		const double z = (y - d.location()) / d.scale();
		return std::exp(-0.5 * z * z - 0.5 * std::log(2.0 * std::numbers::pi) - log_std_normal_cdf(ratio)) / d.scale();
	}
	case DistKind::Gamma:
		if (y <= 0.0) {
			return 0.0;
		}
		return boost::math::gamma_p_derivative(d.gamma_shape(), d.gamma_rate() * y) * d.gamma_rate();
	}
	return 0.0;
}

double cdf(const PredictiveDistribution &d, double y) {
	switch (d.kind()) {
	case DistKind::Normal:
		return std_normal_cdf((y - d.location()) / d.scale());
	case DistKind::TruncatedNormalAtZero: {
		if (y <= 0.0) {
			return 0.0;
		}
		const double ratio = d.location() / d.scale();
		if (ratio < kTruncatedTailCutoff) {
			return -std::expm1(-exponential_rate(d) * y);
		}
		// Upper-tail form keeps precision when the truncation mass is small.
		const double upper = std::exp(log_std_normal_cdf((d.location() - y) / d.scale()) - log_std_normal_cdf(ratio));
		return std::clamp(1.0 - upper, 0.0, 1.0);
	}
	case DistKind::Gamma:
		return gamma_p(d.gamma_shape(), d.gamma_rate() * y);
	}
	return 0.0;
}

double quantile(const PredictiveDistribution &d, double p) {
	if (!(p > 0.0 && p < 1.0)) {
		throw std::invalid_argument("quantile: p must lie in (0, 1)");
	}
	double lo = 0.0;
	double hi = 0.0;
	switch (d.kind()) {
	case DistKind::Normal:
		lo = d.location() - 40.0 * d.scale();
		hi = d.location() + 40.0 * d.scale();
		break;
	case DistKind::TruncatedNormalAtZero:
		lo = 0.0;
		hi = std::max(d.location(), 0.0) + 40.0 * d.scale();
		break;
	case DistKind::Gamma:
		lo = 0.0;
		hi = d.location() + 10.0 * d.scale();
		break;
	}
	for (int i = 0; i < 200 && cdf(d, hi) < p; ++i) {
		hi += (hi - lo);
	}
	while (hi - lo > 1e-10) {
		const double mid = 0.5 * (lo + hi);
		if (mid <= lo || mid >= hi) {
			break;
		}
		if (cdf(d, mid) < p) {
			lo = mid;
		} else {
			hi = mid;
		}
	}
	return 0.5 * (lo + hi);
}

double mean(const PredictiveDistribution &d) {
	switch (d.kind()) {
	case DistKind::Normal:
	case DistKind::Gamma:
		return d.location();
	case DistKind::TruncatedNormalAtZero: {
		const double ratio = d.location() / d.scale();
		if (ratio < kTruncatedTailCutoff) {
			return 1.0 / exponential_rate(d);
		}
		return d.location() +
		       d.scale() * std::exp(-0.5 * ratio * ratio - 0.5 * std::log(2.0 * std::numbers::pi) - log_std_normal_cdf(ratio));
	}
	}
	return d.location();
}

double crps_closed_form(const PredictiveDistribution &d, double y) {
	switch (d.kind()) {
	case DistKind::Normal:
		return crps_normal(d.location(), d.scale(), y);
	case DistKind::TruncatedNormalAtZero:
		// Below the support the CDF is 0, so the score is the distance to 0 plus the score at 0.
		if (y < 0.0) {
			return -y + crps_truncated_normal(d.location(), d.scale(), 0.0);
		}
		return crps_truncated_normal(d.location(), d.scale(), y);
	case DistKind::Gamma:
		if (y < 0.0) {
			return -y + crps_gamma(d.gamma_shape(), d.gamma_rate(), 0.0);
		}
		return crps_gamma(d.gamma_shape(), d.gamma_rate(), y);
	}
	return std::numeric_limits<double>::quiet_NaN();
}

void sample_into(const PredictiveDistribution &d, std::span<double> out, std::mt19937_64 &rng) {
	switch (d.kind()) {
	case DistKind::Normal: {
		std::normal_distribution<double> normal(d.location(), d.scale());
		for (auto &v : out) {
			v = normal(rng);
		}
		return;
	}
	case DistKind::TruncatedNormalAtZero: {
		if (d.location() / d.scale() > -2.0) {
			// Acceptance probability is at least Phi(-2) ~ 2.3%.
			std::normal_distribution<double> normal(d.location(), d.scale());
			for (auto &v : out) {
				do {
					v = normal(rng);
				} while (v < 0.0);
			}
			return;
		}
		std::uniform_real_distribution<double> uniform(0.0, 1.0);
		for (auto &v : out) {
			double u = uniform(rng);
			while (u <= 0.0) {
				u = uniform(rng);
			}
			v = quantile(d, u);
		}
		return;
	}
	case DistKind::Gamma: {
		std::gamma_distribution<double> gamma(d.gamma_shape(), 1.0 / d.gamma_rate());
		for (auto &v : out) {
			v = gamma(rng);
		}
		return;
	}
	}
}

std::vector<double> sample(const PredictiveDistribution &dist, std::size_t m, std::uint64_t seed) {
	std::vector<double> out(m);
	std::mt19937_64 rng(seed);
	sample_into(dist, out, rng);
	return out;
}

} // namespace windcal
