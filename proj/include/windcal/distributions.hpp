#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string_view>
#include <vector>

namespace windcal {

enum class DistKind { Normal, TruncatedNormalAtZero, Gamma };

std::string_view to_string(DistKind kind);
/// Accepts "normal", "truncated_normal" (or "tnormal"), "gamma".
DistKind parse_dist_kind(std::string_view name);

/**
 * Parametric predictive distribution described by a location and a scale.
 *
 * For the two normal kinds location/scale are mu/sigma of the (untruncated) normal. For Gamma they
 * hold the mean and standard deviation; shape and rate follow by moment matching:
 * shape = (location/scale)^2, rate = location/scale^2.
 */
class PredictiveDistribution {
public:
	/// Throws std::invalid_argument unless scale > 0 (and location > 0 for Gamma).
	PredictiveDistribution(DistKind kind, double location, double scale);

	static PredictiveDistribution normal(double mu, double sigma) { return {DistKind::Normal, mu, sigma}; }
	static PredictiveDistribution truncated_normal(double mu, double sigma) {
		return {DistKind::TruncatedNormalAtZero, mu, sigma};
	}
	static PredictiveDistribution gamma(double mean, double sd) { return {DistKind::Gamma, mean, sd}; }

	DistKind kind() const noexcept { return kind_; }
	double location() const noexcept { return location_; }
	double scale() const noexcept { return scale_; }

	double gamma_shape() const noexcept { return (location_ / scale_) * (location_ / scale_); }
	double gamma_rate() const noexcept { return location_ / (scale_ * scale_); }

	friend bool operator==(const PredictiveDistribution &, const PredictiveDistribution &) = default;

private:
	DistKind kind_;
	double location_;
	double scale_;
};

double std_normal_pdf(double z);
double std_normal_cdf(double z);

double pdf(const PredictiveDistribution &dist, double y);
double cdf(const PredictiveDistribution &dist, double y);

/// Inverse CDF by bisection to 1e-10 absolute tolerance in y. p must lie in (0, 1).
double quantile(const PredictiveDistribution &dist, double p);

/// Mean of the distribution (for truncated normal, of the truncated law).
double mean(const PredictiveDistribution &dist);

/// Continuous ranked probability score in closed form.
double crps_closed_form(const PredictiveDistribution &dist, double y);

/// Draws m values deterministically from a generator seeded with `seed`.
std::vector<double> sample(const PredictiveDistribution &dist, std::size_t m, std::uint64_t seed);

/// Fills `out` with draws from a caller-owned generator.
void sample_into(const PredictiveDistribution &dist, std::span<double> out, std::mt19937_64 &rng);

} // namespace windcal
