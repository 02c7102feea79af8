#include "windcal/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

namespace windcal {

namespace {

struct Offsets {
	std::size_t w1, b1, w2, b2, w3, b3;
};

Offsets offsets(const MlpLayout &l) {
	Offsets o{};
	o.w1 = 0;
	o.b1 = o.w1 + l.hidden1 * l.inputs;
	o.w2 = o.b1 + l.hidden1;
	o.b2 = o.w2 + l.hidden2 * l.hidden1;
	o.w3 = o.b2 + l.hidden2;
	o.b3 = o.w3 + l.hidden2;
	return o;
}

double sign(double v) {
	return (v > 0.0) - (v < 0.0);
}

} // namespace

double mlp_forward(const MlpLayout &l, std::span<const double> w, std::span<const double> x) {
	const auto o = offsets(l);
	std::vector<double> h1(l.hidden1), h2(l.hidden2);
	for (std::size_t i = 0; i < l.hidden1; ++i) {
		double z = w[o.b1 + i];
		for (std::size_t k = 0; k < l.inputs; ++k) {
			z += w[o.w1 + i * l.inputs + k] * x[k];
		}
		h1[i] = std::tanh(z);
	}
	for (std::size_t j = 0; j < l.hidden2; ++j) {
		double z = w[o.b2 + j];
		for (std::size_t i = 0; i < l.hidden1; ++i) {
			z += w[o.w2 + j * l.hidden1 + i] * h1[i];
		}
		h2[j] = std::tanh(z);
	}
	double out = w[o.b3];
	for (std::size_t j = 0; j < l.hidden2; ++j) {
		out += w[o.w3 + j] * h2[j];
	}
	return out;
}

double mlp_loss(const MlpLayout &l, std::span<const double> w, const Matrix &x, std::span<const double> y,
                std::span<double> grad) {
	const auto o = offsets(l);
	const bool want_grad = !grad.empty();
	if (want_grad) {
		std::fill(grad.begin(), grad.end(), 0.0);
	}
	const std::size_t n = x.rows();
	std::vector<double> h1(l.hidden1), h2(l.hidden2), d1(l.hidden1), d2(l.hidden2);
	double loss = 0.0;
	for (std::size_t r = 0; r < n; ++r) {
		const auto xr = x.row(r);
		for (std::size_t i = 0; i < l.hidden1; ++i) {
			double z = w[o.b1 + i];
			for (std::size_t k = 0; k < l.inputs; ++k) {
				z += w[o.w1 + i * l.inputs + k] * xr[k];
			}
			h1[i] = std::tanh(z);
		}
		for (std::size_t j = 0; j < l.hidden2; ++j) {
			double z = w[o.b2 + j];
			for (std::size_t i = 0; i < l.hidden1; ++i) {
				z += w[o.w2 + j * l.hidden1 + i] * h1[i];
			}
			h2[j] = std::tanh(z);
		}
		double out = w[o.b3];
		for (std::size_t j = 0; j < l.hidden2; ++j) {
			out += w[o.w3 + j] * h2[j];
		}
		const double err = out - y[r];
		loss += err * err;
		if (!want_grad) {
			continue;
		}
		const double d_out = 2.0 * err / static_cast<double>(n);
		grad[o.b3] += d_out;
		for (std::size_t j = 0; j < l.hidden2; ++j) {
			grad[o.w3 + j] += d_out * h2[j];
			d2[j] = d_out * w[o.w3 + j] * (1.0 - h2[j] * h2[j]);
			grad[o.b2 + j] += d2[j];
		}
		for (std::size_t i = 0; i < l.hidden1; ++i) {
			double acc = 0.0;
			for (std::size_t j = 0; j < l.hidden2; ++j) {
				grad[o.w2 + j * l.hidden1 + i] += d2[j] * h1[i];
				acc += d2[j] * w[o.w2 + j * l.hidden1 + i];
			}
			d1[i] = acc * (1.0 - h1[i] * h1[i]);
			grad[o.b1 + i] += d1[i];
			for (std::size_t k = 0; k < l.inputs; ++k) {
				grad[o.w1 + i * l.inputs + k] += d1[i] * xr[k];
			}
		}
	}
	return loss / static_cast<double>(n);
}

double MlpModel::predict(std::span<const double> features) const {
	std::vector<double> x(layout.inputs);
	for (std::size_t k = 0; k < layout.inputs; ++k) {
		x[k] = (features[k] - input_mean[k]) / input_scale[k];
	}
	return target_mean + target_scale * mlp_forward(layout, weights, x);
}

MlpModel train_mlp(const Matrix &features, std::span<const double> target, std::uint64_t seed,
                   const MlpOptions &options) {
	const std::size_t n = features.rows();
	const std::size_t p = features.cols();
	if (n != target.size()) {
		throw std::invalid_argument("train_mlp: feature and target rows differ");
	}
	MlpModel model;
	model.layout = {p, options.hidden1, options.hidden2};
	model.input_mean.assign(p, 0.0);
	model.input_scale.assign(p, 1.0);
	for (std::size_t k = 0; k < p; ++k) {
		const auto col = features.column(k);
		const double m = std::accumulate(col.begin(), col.end(), 0.0) / static_cast<double>(n);
		double ss = 0.0;
		for (const double v : col) {
			ss += (v - m) * (v - m);
		}
		const double sd = std::sqrt(ss / static_cast<double>(n));
		model.input_mean[k] = m;
		model.input_scale[k] = sd > 0.0 ? sd : 1.0;
	}
	{
		const double m = std::accumulate(target.begin(), target.end(), 0.0) / static_cast<double>(n);
		double ss = 0.0;
		for (const double v : target) {
			ss += (v - m) * (v - m);
		}
		const double sd = std::sqrt(ss / static_cast<double>(n));
		model.target_mean = m;
		model.target_scale = sd > 0.0 ? sd : 1.0;
	}

	std::mt19937_64 rng(seed);
	std::vector<std::size_t> order(n);
	std::iota(order.begin(), order.end(), 0);
	std::shuffle(order.begin(), order.end(), rng);
	const auto n_val = static_cast<std::size_t>(std::floor(options.validation_fraction * static_cast<double>(n)));

	Matrix x_train(n - n_val, p), x_val(n_val, p);
	std::vector<double> y_train(n - n_val), y_val(n_val);
	for (std::size_t i = 0; i < n; ++i) {
		const auto src = order[i];
		const bool val = i < n_val;
		auto dst = val ? x_val.row(i) : x_train.row(i - n_val);
		for (std::size_t k = 0; k < p; ++k) {
			dst[k] = (features(src, k) - model.input_mean[k]) / model.input_scale[k];
		}
		const double yv = (target[src] - model.target_mean) / model.target_scale;
		(val ? y_val[i] : y_train[i - n_val]) = yv;
	}

	const auto &layout = model.layout;
	const std::size_t n_params = layout.parameter_count();
	std::vector<double> w(n_params);
	{
		// Glorot-uniform initialization per layer, zero biases.
		const auto o = offsets(layout);
		auto init = [&](std::size_t begin, std::size_t count, std::size_t fan_in, std::size_t fan_out) {
			const double a = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
			std::uniform_real_distribution<double> u(-a, a);
			for (std::size_t i = 0; i < count; ++i) {
				w[begin + i] = u(rng);
			}
		};
		init(o.w1, layout.hidden1 * p, p, layout.hidden1);
		init(o.w2, layout.hidden2 * layout.hidden1, layout.hidden1, layout.hidden2);
		init(o.w3, layout.hidden2, layout.hidden2, 1);
	}

	std::vector<double> grad(n_params), prev_grad(n_params, 0.0), delta(n_params, options.delta_initial);
	std::vector<double> best = w;
	const bool has_val = n_val > 0;
	double best_val = has_val ? mlp_loss(layout, w, x_val, y_val, {}) : mlp_loss(layout, w, x_train, y_train, {});
	std::size_t stalled = 0;
	std::size_t epoch = 0;
	for (; epoch < options.max_epochs; ++epoch) {
		const double loss = mlp_loss(layout, w, x_train, y_train, grad);
		if (!std::isfinite(loss)) {
			throw std::runtime_error("train_mlp: training loss became non-finite");
		}
		for (std::size_t i = 0; i < n_params; ++i) {
			const double s = prev_grad[i] * grad[i];
			if (s > 0.0) {
				delta[i] = std::min(delta[i] * options.eta_plus, options.delta_max);
			} else if (s < 0.0) {
				delta[i] = std::max(delta[i] * options.eta_minus, options.delta_min);
				grad[i] = 0.0;
			}
			w[i] -= sign(grad[i]) * delta[i];
			prev_grad[i] = grad[i];
		}
		const double monitor =
		    has_val ? mlp_loss(layout, w, x_val, y_val, {}) : mlp_loss(layout, w, x_train, y_train, {});
		if (!std::isfinite(monitor)) {
			throw std::runtime_error("train_mlp: loss became non-finite");
		}
		if (monitor < best_val) {
			best_val = monitor;
			best = w;
			stalled = 0;
		} else if (++stalled >= options.patience) {
			++epoch;
			break;
		}
	}
	model.weights = std::move(best);
	model.epochs = epoch;
	return model;
}

} // namespace windcal
