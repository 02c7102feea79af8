#pragma once

// Reference implementations used only by the tests. They share no code with the library.

#include <algorithm>
#include <cmath>
#include <vector>

#include <boost/math/distributions/gamma.hpp>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace oracle {

enum class Law { Normal, TruncatedNormal, Gamma };

struct Dist {
	Law law;
	double location;
	double scale;
};

inline double cdf(const Dist &d, double x) {
	using boost::math::normal;
	switch (d.law) {
	case Law::Normal:
		return boost::math::cdf(normal(d.location, d.scale), x);
	case Law::TruncatedNormal: {
		if (x <= 0.0) {
			return 0.0;
		}
		const normal n(d.location, d.scale);
		const double mass = boost::math::cdf(boost::math::complement(n, 0.0));
		return 1.0 - boost::math::cdf(boost::math::complement(n, x)) / mass;
	}
	case Law::Gamma: {
		if (x <= 0.0) {
			return 0.0;
		}
		const double shape = (d.location / d.scale) * (d.location / d.scale);
		const double rate = d.location / (d.scale * d.scale);
		return boost::math::cdf(boost::math::gamma_distribution<double>(shape, 1.0 / rate), x);
	}
	}
	return 0.0;
}

/// CRPS as the integral of (F(x) - 1{x >= y})^2, by adaptive Gauss-Kronrod on a truncated range.
inline double crps_quadrature(const Dist &d, double y) {
	using boost::math::quadrature::gauss_kronrod;
	constexpr double kTol = 1e-9;
	const double lo = d.law == Law::Normal ? d.location - 40.0 * d.scale : 0.0;
	const double hi = std::max(d.location, 0.0) + 60.0 * d.scale;
	auto below = [&](double x) {
		const double f = cdf(d, x);
		return f * f;
	};
	auto above = [&](double x) {
		const double f = 1.0 - cdf(d, x);
		return f * f;
	};
	double total = 0.0;
	if (y > lo) {
		// F is negligible below the bulk; splitting there keeps narrow laws cheap to resolve.
		const double knee = std::clamp(d.location - 8.0 * d.scale, lo, y);
		if (knee > lo) {
			total += gauss_kronrod<double, 31>::integrate(below, lo, knee, 15, kTol);
		}
		total += gauss_kronrod<double, 31>::integrate(below, knee, y, 15, kTol);
	} else {
		total += lo - y; // F = 0 between y and the support
	}
	const double start = std::max(y, lo);
	// Split the upper integral so the adaptive rule resolves the bulk.
	const double mid = std::max(start, d.location + 8.0 * d.scale);
	if (mid > start) {
		total += gauss_kronrod<double, 31>::integrate(above, start, mid, 15, kTol);
	}
	total += gauss_kronrod<double, 31>::integrate(above, mid, std::max(hi, mid + 1.0), 15, kTol);
	return total;
}

/// Sample CRPS by the double sum, O(M^2).
inline double sample_crps_bruteforce(const std::vector<double> &x, double y) {
	const double m = static_cast<double>(x.size());
	double first = 0.0, second = 0.0;
	for (const double a : x) {
		first += std::abs(a - y);
		for (const double b : x) {
			second += std::abs(a - b);
		}
	}
	return first / m - second / (2.0 * m * m);
}

} // namespace oracle
