#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace windcal {

/// Seconds since 1970-01-01T00:00:00Z.
using Timestamp = std::int64_t;

inline constexpr Timestamp kSecondsPerHour = 3600;
inline constexpr Timestamp kSecondsPerDay = 86400;

/// Dense row-major matrix of doubles. Rows are exposed as spans.
class Matrix {
public:
	Matrix() = default;
	Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
	    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

	std::size_t rows() const noexcept { return rows_; }
	std::size_t cols() const noexcept { return cols_; }
	bool empty() const noexcept { return rows_ == 0; }

	double &operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
	double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

	std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
	std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

	/// Appends a row; the first appended row fixes the column count of an empty matrix.
	void append_row(std::span<const double> values) {
		if (rows_ == 0 && cols_ == 0) {
			cols_ = values.size();
		}
		if (values.size() != cols_) {
			throw std::invalid_argument("Matrix::append_row: expected " + std::to_string(cols_) + " columns, got " +
			                            std::to_string(values.size()));
		}
		data_.insert(data_.end(), values.begin(), values.end());
		++rows_;
	}

	std::vector<double> column(std::size_t c) const {
		std::vector<double> out(rows_);
		for (std::size_t r = 0; r < rows_; ++r) {
			out[r] = (*this)(r, c);
		}
		return out;
	}

	const std::vector<double> &data() const noexcept { return data_; }

	friend bool operator==(const Matrix &, const Matrix &) = default;

private:
	std::size_t rows_ = 0;
	std::size_t cols_ = 0;
	std::vector<double> data_;
};

/// Raised when a predictive scale collapses to zero.
class DegenerateScale : public std::domain_error {
public:
	using std::domain_error::domain_error;
};

/// Raised by input parsers; carries the 1-based line number when known.
class ParseError : public std::runtime_error {
public:
	ParseError(const std::string &what, std::size_t line = 0) : std::runtime_error(what), line_(line) {}
	std::size_t line() const noexcept { return line_; }

private:
	std::size_t line_;
};

// ISO-8601 UTC helpers. Accepted input forms: YYYY-MM-DD, YYYY-MM-DDTHH:MM, YYYY-MM-DDTHH:MM:SS,
// optionally suffixed with 'Z'. A space may replace 'T'.
Timestamp parse_iso8601(std::string_view text);
std::string format_iso8601(Timestamp t);
std::string format_date(Timestamp t);

/// Calendar day index (days since epoch) of a timestamp.
inline std::int64_t day_index(Timestamp t) {
	return t >= 0 ? t / kSecondsPerDay : -((-t + kSecondsPerDay - 1) / kSecondsPerDay);
}

struct CivilTime {
	int year;
	unsigned month; // 1..12
	unsigned day;
	int hour;
};
CivilTime to_civil(Timestamp t);

/// Mixes integers into a 64-bit seed (splitmix64 finalizer).
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t value);

template <typename... Ts>
std::uint64_t derive_seed(std::uint64_t seed, Ts... values) {
	((seed = mix_seed(seed, static_cast<std::uint64_t>(values))), ...);
	return seed;
}

std::uint64_t hash_string(std::string_view s);

} // namespace windcal
