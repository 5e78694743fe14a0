#include "fer/expression.hpp"

#include <string>

#include "fer/error.hpp"

namespace fer {

namespace {
constexpr std::array<std::string_view, kNumClasses> kKeys = {
    "neutral", "anger", "disgust", "fear", "happiness", "sadness", "surprise", "other"};
constexpr std::array<std::string_view, kNumClasses> kNames = {
    "Neutral", "Anger", "Disgust", "Fear", "Happiness", "Sadness", "Surprise", "Other"};
}  // namespace

std::optional<Expression> expression_from_int(long value) noexcept {
  if (value < -1 || value >= kNumClasses) return std::nullopt;
  return static_cast<Expression>(value);
}

Expression expression_at(int index) {
  if (index < 0 || index >= kNumClasses)
    throw ArgumentError("class index out of range: " + std::to_string(index));
  return static_cast<Expression>(index);
}

std::string_view class_key(Expression e) {
  return is_labeled(e) ? kKeys[index_of(e)] : std::string_view("unlabeled");
}

std::string_view class_name(Expression e) {
  return is_labeled(e) ? kNames[index_of(e)] : std::string_view("Unlabeled");
}

std::string_view stream_name(Stream s) {
  switch (s) {
    case Stream::Visual: return "visual";
    case Stream::Temporal: return "temporal";
    case Stream::Audio: return "audio";
  }
  return "?";
}

Stream parse_stream(std::string_view name) {
  if (name == "visual") return Stream::Visual;
  if (name == "temporal") return Stream::Temporal;
  if (name == "audio") return Stream::Audio;
  throw ArgumentError("unknown stream '" + std::string(name) + "'");
}

}  // namespace fer
