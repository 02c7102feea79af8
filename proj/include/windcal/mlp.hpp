#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "windcal/common.hpp"

namespace windcal {

// Feed-forward network inputs -> 10 tanh -> 7 tanh -> 1 linear, trained with Rprop.

struct MlpOptions {
	std::size_t hidden1 = 10;
	std::size_t hidden2 = 7;
	double eta_plus = 1.2;
	double eta_minus = 0.5;
	double delta_initial = 0.1;
	double delta_max = 50.0;
	double delta_min = 1e-6;
	std::size_t patience = 25;
	std::size_t max_epochs = 2000;
	double validation_fraction = 0.1;
};

struct MlpLayout {
	std::size_t inputs = 0;
	std::size_t hidden1 = 10;
	std::size_t hidden2 = 7;

	/// Flat parameter order: W1 (h1 x in), b1, W2 (h2 x h1), b2, W3 (1 x h2), b3.
	std::size_t parameter_count() const { return hidden1 * inputs + hidden1 + hidden2 * hidden1 + hidden2 + hidden2 + 1; }
};

/// Forward pass for one standardized input row.
double mlp_forward(const MlpLayout &layout, std::span<const double> weights, std::span<const double> x);

/// Mean squared error over the rows of x (standardized) against y; fills `grad` when non-empty.
double mlp_loss(const MlpLayout &layout, std::span<const double> weights, const Matrix &x, std::span<const double> y,
                std::span<double> grad);

struct MlpModel {
	MlpLayout layout;
	std::vector<double> weights;
	std::vector<double> input_mean;
	std::vector<double> input_scale;
	double target_mean = 0.0;
	double target_scale = 1.0;
	std::size_t epochs = 0;

	/// Prediction in original target units for a raw (unstandardized) feature row.
	double predict(std::span<const double> features) const;
};

/// Standardizes inputs and target, then trains with iRprop- and validation early stopping.
/// Throws std::runtime_error when the loss becomes non-finite.
MlpModel train_mlp(const Matrix &features, std::span<const double> target, std::uint64_t seed,
                   const MlpOptions &options);

} // namespace windcal
