#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include <fmt/format.h>

#include "windcal/models.hpp"

namespace windcal {

namespace {

constexpr std::size_t kMinLeaf = 5;

/// Weather, lag and dummies laid out as in feature_vector().
Matrix frame_features(const FeatureFrame &frame, std::vector<std::string> &names, FeatureSchema &schema) {
	schema.weather = frame.weather_names;
	schema.uses_lag24 = !frame.lag24_power.empty();
	schema.dummies = frame.dummy_names;
	names = frame.weather_names;
	if (schema.uses_lag24) {
		names.emplace_back("lag24_power");
	}
	names.insert(names.end(), frame.dummy_names.begin(), frame.dummy_names.end());

	Matrix x(frame.rows(), names.size());
	for (std::size_t r = 0; r < frame.rows(); ++r) {
		std::size_t c = 0;
		for (std::size_t k = 0; k < frame.weather_names.size(); ++k) {
			x(r, c++) = frame.weather(r, k);
		}
		if (schema.uses_lag24) {
			x(r, c++) = frame.lag24_power[r];
		}
		for (std::size_t j = 0; j < frame.dummy_names.size(); ++j) {
			x(r, c++) = frame.dummies(r, j);
		}
	}
	return x;
}

class TreeBuilder {
public:
	TreeBuilder(const Matrix &x, std::span<const double> y, std::size_t mtry, std::mt19937_64 &rng,
	            std::vector<std::uint64_t> &split_counts)
	    : x_(x), y_(y), mtry_(mtry), rng_(rng), split_counts_(split_counts), features_(x.cols()) {
		std::iota(features_.begin(), features_.end(), 0);
	}

	RegressionTree build(std::vector<std::size_t> rows) {
		tree_.nodes.clear();
		grow(rows, 0, rows.size());
		return std::move(tree_);
	}

private:
	struct Split {
		int feature = -1;
		double threshold = 0.0;
		double score = -1.0;
	};

	int grow(std::vector<std::size_t> &rows, std::size_t begin, std::size_t end) {
		const int index = static_cast<int>(tree_.nodes.size());
		tree_.nodes.emplace_back();
		const std::size_t n = end - begin;
		double sum = 0.0;
		for (std::size_t i = begin; i < end; ++i) {
			sum += y_[rows[i]];
		}
		tree_.nodes[index].value = sum / static_cast<double>(n);
		if (n < 2 * kMinLeaf) {
			return index;
		}
		const Split split = best_split(rows, begin, end, sum);
		if (split.feature < 0) {
			return index;
		}
		const auto f = static_cast<std::size_t>(split.feature);
		const auto mid_it = std::partition(rows.begin() + static_cast<std::ptrdiff_t>(begin),
		                                   rows.begin() + static_cast<std::ptrdiff_t>(end),
		                                   [&](std::size_t r) { return x_(r, f) <= split.threshold; });
		const auto mid = static_cast<std::size_t>(mid_it - rows.begin());
		++split_counts_[f];
		tree_.nodes[index].feature = split.feature;
		tree_.nodes[index].threshold = split.threshold;
		const int left = grow(rows, begin, mid);
		const int right = grow(rows, mid, end);
		tree_.nodes[index].left = left;
		tree_.nodes[index].right = right;
		return index;
	}

	// Maximizes the between-children sum of squares, equivalent to minimizing child SSE.
	Split best_split(const std::vector<std::size_t> &rows, std::size_t begin, std::size_t end, double total) {
		const std::size_t n = end - begin;
		Split best;
		const double base = total * total / static_cast<double>(n);
		std::shuffle(features_.begin(), features_.end(), rng_);
		std::vector<std::pair<double, double>> vals(n);
		for (std::size_t fi = 0; fi < mtry_; ++fi) {
			const auto f = features_[fi];
			for (std::size_t i = 0; i < n; ++i) {
				vals[i] = {x_(rows[begin + i], f), y_[rows[begin + i]]};
			}
			std::sort(vals.begin(), vals.end());
			if (vals.front().first == vals.back().first) {
				continue;
			}
			double left_sum = 0.0;
			for (std::size_t i = 0; i + 1 < n; ++i) {
				left_sum += vals[i].second;
				const std::size_t nl = i + 1;
				const std::size_t nr = n - nl;
				if (nl < kMinLeaf || nr < kMinLeaf || vals[i].first == vals[i + 1].first) {
					continue;
				}
				const double right_sum = total - left_sum;
				const double score = left_sum * left_sum / static_cast<double>(nl) +
				                     right_sum * right_sum / static_cast<double>(nr) - base;
				if (score > best.score + 1e-12) {
					best.score = score;
					best.feature = static_cast<int>(f);
					best.threshold = 0.5 * (vals[i].first + vals[i + 1].first);
				}
			}
		}
		if (best.score <= 0.0) {
			best.feature = -1;
		}
		return best;
	}

	const Matrix &x_;
	std::span<const double> y_;
	std::size_t mtry_;
	std::mt19937_64 &rng_;
	std::vector<std::uint64_t> &split_counts_;
	std::vector<std::size_t> features_;
	RegressionTree tree_;
};

} // namespace

double RegressionTree::predict(std::span<const double> x) const {
	int i = 0;
	while (nodes[static_cast<std::size_t>(i)].feature >= 0) {
		const auto &node = nodes[static_cast<std::size_t>(i)];
		i = x[static_cast<std::size_t>(node.feature)] <= node.threshold ? node.left : node.right;
	}
	return nodes[static_cast<std::size_t>(i)].value;
}

ForecastModel fit_random_forest(const FeatureFrame &frame, std::size_t n_trees, std::uint64_t seed) {
	frame.validate(true);
	if (frame.rows() < 50) {
		throw std::invalid_argument(fmt::format("fit_random_forest needs at least 50 rows, got {}", frame.rows()));
	}
	if (n_trees == 0) {
		throw std::invalid_argument("fit_random_forest: n_trees must be >= 1");
	}
	ForestState forest;
	FeatureSchema schema;
	const Matrix x = frame_features(frame, forest.feature_names, schema);
	if (x.cols() == 0) {
		throw std::invalid_argument("fit_random_forest: no features");
	}
	forest.split_counts.assign(x.cols(), 0);
	const std::size_t mtry = std::max<std::size_t>(1, (x.cols() + 2) / 3);
	const std::size_t n = frame.rows();
	forest.trees.reserve(n_trees);
	for (std::size_t t = 0; t < n_trees; ++t) {
		std::mt19937_64 rng(derive_seed(seed, t));
		std::uniform_int_distribution<std::size_t> pick(0, n - 1);
		std::vector<std::size_t> rows(n);
		for (auto &r : rows) {
			r = pick(rng);
		}
		TreeBuilder builder(x, frame.target_power, mtry, rng, forest.split_counts);
		forest.trees.push_back(builder.build(std::move(rows)));
	}
	return ForecastModel(ModelKind::RandomForest, 0, std::move(schema), std::move(forest));
}

ForecastModel fit_mlp(const FeatureFrame &frame, std::uint64_t seed, const MlpOptions &options) {
	frame.validate(true);
	if (frame.rows() < 100) {
		throw std::invalid_argument(fmt::format("fit_mlp needs at least 100 rows, got {}", frame.rows()));
	}
	std::vector<std::string> names;
	FeatureSchema schema;
	const Matrix x = frame_features(frame, names, schema);
	if (x.cols() == 0) {
		throw std::invalid_argument("fit_mlp: no features");
	}
	auto model = train_mlp(x, frame.target_power, seed, options);
	return ForecastModel(ModelKind::Mlp, 0, std::move(schema), std::move(model));
}

} // namespace windcal
