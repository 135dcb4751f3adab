#pragma once

#include <boost/rational.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace xchain {

using Rational = boost::rational<std::int64_t>;

/// "p" for integers, "p/q" otherwise.
std::string format_rational(const Rational& r);
std::optional<Rational> parse_rational(std::string_view text);

}  // namespace xchain
