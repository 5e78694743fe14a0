#include "fer/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <vector>

#include "fer/error.hpp"

namespace fer {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_list(std::string_view s) {
  std::vector<std::string_view> out;
  while (true) {
    const auto comma = s.find(',');
    out.push_back(trim(s.substr(0, comma)));
    if (comma == std::string_view::npos) break;
    s = s.substr(comma + 1);
  }
  return out;
}

template <typename T>
T parse_number(std::string_view key, std::string_view s) {
  s = trim(s);
  T out{};
  const char* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, out);
  if (ec != std::errc() || ptr != end || s.empty())
    throw ArgumentError("bad value '" + std::string(s) + "' for " + std::string(key));
  return out;
}

bool parse_bool(std::string_view key, std::string_view s) {
  s = trim(s);
  if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
  if (s == "false" || s == "0" || s == "no" || s == "off") return false;
  throw ArgumentError("bad boolean '" + std::string(s) + "' for " + std::string(key));
}

Expression parse_class(std::string_view s) {
  for (auto c : kAllClasses)
    if (class_key(c) == s || class_name(c) == s) return c;
  throw ArgumentError("unknown expression class '" + std::string(s) + "'");
}

using Setter = std::function<void(RunConfig&, std::string_view)>;

const std::map<std::string, Setter, std::less<>>& setters() {
  static const std::map<std::string, Setter, std::less<>> table = {
      {"dataset.root", [](RunConfig& c, std::string_view v) { c.dataset_root = std::string(trim(v)); }},
      {"dataset.split", [](RunConfig& c, std::string_view v) { c.split = parse_split(trim(v)); }},
      {"dataset.eval_split", [](RunConfig& c, std::string_view v) { c.eval_split = parse_split(trim(v)); }},
      {"dataset.fps", [](RunConfig& c, std::string_view v) { c.fps = parse_rational(v); }},
      {"dataset.manifest", [](RunConfig& c, std::string_view v) { c.manifest = std::string(trim(v)); }},

      {"mel.sample_rate", [](RunConfig& c, std::string_view v) { c.mel.sample_rate = parse_number<int>("mel.sample_rate", v); }},
      {"mel.n_fft", [](RunConfig& c, std::string_view v) { c.mel.n_fft = parse_number<int>("mel.n_fft", v); }},
      {"mel.hop", [](RunConfig& c, std::string_view v) { c.mel.hop = parse_number<int>("mel.hop", v); }},
      {"mel.n_mels", [](RunConfig& c, std::string_view v) { c.mel.n_mels = parse_number<int>("mel.n_mels", v); }},
      {"mel.f_min", [](RunConfig& c, std::string_view v) { c.mel.f_min = parse_number<double>("mel.f_min", v); }},
      {"mel.f_max", [](RunConfig& c, std::string_view v) { c.mel.f_max = parse_number<double>("mel.f_max", v); }},
      {"mel.log_floor", [](RunConfig& c, std::string_view v) { c.mel.log_floor = parse_number<double>("mel.log_floor", v); }},

      {"train.epochs", [](RunConfig& c, std::string_view v) { c.train.epochs = parse_number<int>("train.epochs", v); }},
      {"train.batch_size", [](RunConfig& c, std::string_view v) { c.train.batch_size = parse_number<int>("train.batch_size", v); }},
      {"train.lr0", [](RunConfig& c, std::string_view v) { c.train.lr0 = parse_number<double>("train.lr0", v); }},
      {"train.momentum", [](RunConfig& c, std::string_view v) { c.train.momentum = parse_number<double>("train.momentum", v); }},
      {"train.gamma", [](RunConfig& c, std::string_view v) { c.train.gamma = parse_number<double>("train.gamma", v); }},
      {"train.milestones",
       [](RunConfig& c, std::string_view v) {
         c.train.milestones.clear();
         if (trim(v).empty()) return;
         for (auto item : split_list(v)) c.train.milestones.push_back(parse_number<int>("train.milestones", item));
       }},
      {"train.halfmix", [](RunConfig& c, std::string_view v) { c.train.halfmix_enabled = parse_bool("train.halfmix", v); }},
      {"train.subsample", [](RunConfig& c, std::string_view v) { c.subsample = parse_number<double>("train.subsample", v); }},

      {"augment.flip_probability",
       [](RunConfig& c, std::string_view v) { c.augment.flip_probability = parse_number<double>("augment.flip_probability", v); }},
      {"augment.halfmix_probability",
       [](RunConfig& c, std::string_view v) {
         c.augment.halfmix_probability = parse_number<double>("augment.halfmix_probability", v);
       }},
      {"augment.mask",
       [](RunConfig& c, std::string_view v) {
         v = trim(v);
         if (v == "binary") c.augment.mask = MaskMode::Binary;
         else if (v == "soft") c.augment.mask = MaskMode::Soft;
         else throw ArgumentError("augment.mask must be binary or soft");
       }},
      {"augment.minority",
       [](RunConfig& c, std::string_view v) {
         c.augment.minority.clear();
         for (auto item : split_list(v)) c.augment.minority.insert(parse_class(item));
       }},
      {"augment.crop_fraction",
       [](RunConfig& c, std::string_view v) { c.augment.crop_fraction = parse_number<double>("augment.crop_fraction", v); }},
      {"augment.crop", [](RunConfig& c, std::string_view v) { c.augment_crop = parse_bool("augment.crop", v); }},
      {"augment.halfmix", [](RunConfig& c, std::string_view v) { c.augment_halfmix = parse_bool("augment.halfmix", v); }},
      {"augment.jitter", [](RunConfig& c, std::string_view v) { c.augment.jitter = parse_bool("augment.jitter", v); }},
      {"augment.jitter_probability",
       [](RunConfig& c, std::string_view v) {
         c.augment.jitter_config.probability = parse_number<double>("augment.jitter_probability", v);
       }},
      {"augment.brightness",
       [](RunConfig& c, std::string_view v) { c.augment.jitter_config.brightness = parse_number<double>("augment.brightness", v); }},
      {"augment.contrast_min",
       [](RunConfig& c, std::string_view v) {
         c.augment.jitter_config.contrast_min = parse_number<double>("augment.contrast_min", v);
       }},
      {"augment.contrast_max",
       [](RunConfig& c, std::string_view v) {
         c.augment.jitter_config.contrast_max = parse_number<double>("augment.contrast_max", v);
       }},

      {"fusion.weights",
       [](RunConfig& c, std::string_view v) {
         const auto items = split_list(v);
         if (items.size() != 3) throw ArgumentError("fusion.weights needs three values (visual,temporal,audio)");
         for (int i = 0; i < 3; ++i) c.fusion.weights[i] = parse_number<double>("fusion.weights", items[i]);
       }},
      {"fusion.rule", [](RunConfig& c, std::string_view v) { c.fusion.rule = parse_fusion_rule(trim(v)); }},

      {"run.seed",
       [](RunConfig& c, std::string_view v) {
         c.seed = parse_number<std::uint64_t>("run.seed", v);
         c.train.seed = c.seed;
       }},
  };
  return table;
}

}  // namespace

void set_value(RunConfig& config, std::string_view section, std::string_view key, std::string_view value) {
  const std::string full = std::string(section) + "." + std::string(key);
  const auto it = setters().find(full);
  if (it == setters().end()) throw ArgumentError("unknown configuration key '" + full + "'");
  it->second(config, value);
}

void apply_override(RunConfig& config, std::string_view assignment) {
  const auto eq = assignment.find('=');
  const auto dot = assignment.find('.');
  if (eq == std::string_view::npos || dot == std::string_view::npos || dot > eq)
    throw ArgumentError("override must look like section.key=value: '" + std::string(assignment) + "'");
  set_value(config, trim(assignment.substr(0, dot)), trim(assignment.substr(dot + 1, eq - dot - 1)),
            assignment.substr(eq + 1));
}

RunConfig parse_run_config(std::string_view text) {
  RunConfig config;
  std::string section;
  long line_no = 0;
  std::istringstream in{std::string(text)};
  std::string raw;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line = raw;
    const auto comment = line.find_first_of("#;");
    if (comment != std::string_view::npos) line = line.substr(0, comment);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ParseError("unterminated section header", line_no);
      section = std::string(trim(line.substr(1, line.size() - 2)));
      static const char* known[] = {"dataset", "mel", "train", "augment", "fusion", "run"};
      if (std::find(std::begin(known), std::end(known), section) == std::end(known))
        throw ParseError("unknown section [" + section + "]", line_no);
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ParseError("expected key=value", line_no);
    if (section.empty()) throw ParseError("key outside of any section", line_no);
    try {
      set_value(config, section, trim(line.substr(0, eq)), line.substr(eq + 1));
    } catch (const ArgumentError& e) {
      throw ParseError(e.what(), line_no);
    }
  }
  return config;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read config " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return parse_run_config(ss.str());
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.detail(), e.line());
  }
}

void RunConfig::validate() const {
  if (fps.num <= 0 || fps.den <= 0) throw ArgumentError("dataset.fps must be positive");
  mel.validate(mel.sample_rate);
  train.validate();
  augment.validate();
  fusion.validate();
  if (!(subsample > 0.0 && subsample <= 1.0)) throw ArgumentError("train.subsample must lie in (0, 1]");
}

StreamTrainOptions RunConfig::stream_options(Stream stream) const {
  StreamTrainOptions options;
  options.train = train;
  options.train.stream = stream;
  options.train.seed = seed;
  options.train.halfmix_enabled = train.halfmix_enabled && stream == Stream::Visual;
  options.augment = augment;
  options.augment.halfmix = augment_halfmix && stream == Stream::Visual;
  options.augment.random_crop = augment_crop && stream == Stream::Temporal;
  options.mel = mel;
  options.subsample_fraction = stream == Stream::Visual ? subsample : 1.0;
  return options;
}

std::string RunConfig::describe_training() const {
  auto num = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return std::string(buf);
  };
  std::string out = "epochs=" + std::to_string(train.epochs) + " batch=" + std::to_string(train.batch_size) +
                    " lr0=" + num(train.lr0) + " momentum=" + num(train.momentum) + " milestones=";
  for (std::size_t i = 0; i < train.milestones.size(); ++i)
    out += (i ? "," : "") + std::to_string(train.milestones[i]);
  out += " gamma=" + num(train.gamma) + " seed=" + std::to_string(seed);
  return out;
}

}  // namespace fer
