#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string_view>

namespace fer {

inline constexpr int kNumClasses = 8;

// Ordinals are stable: they index every score vector in the system.
enum class Expression : int {
  Unlabeled = -1,
  Neutral = 0,
  Anger = 1,
  Disgust = 2,
  Fear = 3,
  Happiness = 4,
  Sadness = 5,
  Surprise = 6,
  Other = 7,
};

using ScoreRow = std::array<double, kNumClasses>;

constexpr int index_of(Expression e) noexcept { return static_cast<int>(e); }

constexpr bool is_labeled(Expression e) noexcept {
  return index_of(e) >= 0 && index_of(e) < kNumClasses;
}

std::optional<Expression> expression_from_int(long value) noexcept;
Expression expression_at(int index);

// Lower-case names, as used by score-file headers.
std::string_view class_key(Expression e);
// Capitalized display names.
std::string_view class_name(Expression e);

inline constexpr std::array<Expression, kNumClasses> kAllClasses = {
    Expression::Neutral,   Expression::Anger,   Expression::Disgust,
    Expression::Fear,      Expression::Happiness, Expression::Sadness,
    Expression::Surprise,  Expression::Other};

enum class Stream : int { Visual = 0, Temporal = 1, Audio = 2 };

std::string_view stream_name(Stream s);
Stream parse_stream(std::string_view name);

}  // namespace fer
