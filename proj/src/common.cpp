#include "windcal/common.hpp"

#include <chrono>
#include <cstdio>

#include <fmt/format.h>

namespace windcal {

Timestamp parse_iso8601(std::string_view text) {
	while (!text.empty() && (text.back() == 'Z' || text.back() == ' ' || text.back() == '\r')) {
		text.remove_suffix(1);
	}
	while (!text.empty() && text.front() == ' ') {
		text.remove_prefix(1);
	}
	const std::string buf(text);
	int y = 0, mo = 0, d = 0, h = 0, mi = 0, s = 0;
	char sep = 'T';
	int consumed = 0;
	int n = std::sscanf(buf.c_str(), "%4d-%2d-%2d%n", &y, &mo, &d, &consumed);
	if (n != 3) {
		throw ParseError("invalid timestamp '" + buf + "'");
	}
	if (static_cast<std::size_t>(consumed) < buf.size()) {
		int rest = 0;
		n = std::sscanf(buf.c_str() + consumed, "%c%2d:%2d%n", &sep, &h, &mi, &rest);
		if (n != 3 || (sep != 'T' && sep != ' ')) {
			throw ParseError("invalid timestamp '" + buf + "'");
		}
		consumed += rest;
		if (static_cast<std::size_t>(consumed) < buf.size()) {
			rest = 0;
			n = std::sscanf(buf.c_str() + consumed, ":%2d%n", &s, &rest);
			if (n != 1 || static_cast<std::size_t>(consumed + rest) != buf.size()) {
				throw ParseError("invalid timestamp '" + buf + "'");
			}
		}
	}
	using namespace std::chrono;
	const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
	if (!ymd.ok() || h < 0 || h > 23 || mi < 0 || mi > 59 || s < 0 || s > 59) {
		throw ParseError("invalid timestamp '" + buf + "'");
	}
	const auto days = sys_days{ymd}.time_since_epoch().count();
	return static_cast<Timestamp>(days) * kSecondsPerDay + h * kSecondsPerHour + mi * 60 + s;
}

CivilTime to_civil(Timestamp t) {
	using namespace std::chrono;
	const auto d = day_index(t);
	const year_month_day ymd{sys_days{days{d}}};
	const auto secs = t - d * kSecondsPerDay;
	return {static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
	        static_cast<int>(secs / kSecondsPerHour)};
}

std::string format_iso8601(Timestamp t) {
	const auto c = to_civil(t);
	const auto secs = t - day_index(t) * kSecondsPerDay;
	return fmt::format("{:04d}-{:02d}-{:02d}T{:02d}:{:02d}:{:02d}Z", c.year, c.month, c.day, secs / 3600,
	                   (secs % 3600) / 60, secs % 60);
}

std::string format_date(Timestamp t) {
	const auto c = to_civil(t);
	return fmt::format("{:04d}-{:02d}-{:02d}", c.year, c.month, c.day);
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t value) {
	std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL + value * 0xBF58476D1CE4E5B9ULL;
	z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
	z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
	return z ^ (z >> 31);
}

std::uint64_t hash_string(std::string_view s) {
	// FNV-1a
	std::uint64_t h = 0xcbf29ce484222325ULL;
	for (const char c : s) {
		h ^= static_cast<unsigned char>(c);
		h *= 0x100000001b3ULL;
	}
	return h;
}

} // namespace windcal
