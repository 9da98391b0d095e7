#include "capgate/data_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>

namespace capgate {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

// Splits one CSV line; supports double-quoted fields with "" escapes.
std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur.push_back(ch);
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  fields.push_back(std::move(cur));
  return fields;
}

std::string quote_if_needed(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out.push_back('"');
    out.push_back(ch);
  }
  out.push_back('"');
  return out;
}

std::string at_row(std::size_t row) { return " at row " + std::to_string(row); }

}  // namespace

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

ScoredDataset read_csv(std::istream& in, std::vector<std::string>* warnings) {
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorKind::Schema, "schema error: missing header row");
  if (line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);

  const auto header = split_csv_line(line);
  int score_col = -1, label_col = -1, group_col = -1;
  for (std::size_t c = 0; c < header.size(); ++c) {
    const auto name = trim(header[c]);
    if (name == "score") score_col = static_cast<int>(c);
    else if (name == "label") label_col = static_cast<int>(c);
    else if (name == "group") group_col = static_cast<int>(c);
    else if (warnings) warnings->push_back("ignoring column '" + std::string(name) + "'");
  }
  if (score_col < 0 || label_col < 0 || group_col < 0) {
    throw Error(ErrorKind::Schema, "schema error: header must contain score, label and group columns");
  }
  const auto needed = static_cast<std::size_t>(std::max({score_col, label_col, group_col})) + 1;

  std::vector<double> scores;
  std::vector<std::uint8_t> labels;
  std::vector<std::string> groups;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    ++row;
    const auto fields = split_csv_line(line);
    if (fields.size() < needed) throw Error(ErrorKind::Schema, "schema error: too few fields" + at_row(row));

    const auto score_text = trim(fields[score_col]);
    double score = 0.0;
    auto [ptr, ec] = std::from_chars(score_text.data(), score_text.data() + score_text.size(), score);
    if (ec != std::errc() || ptr != score_text.data() + score_text.size()) {
      throw Error(ErrorKind::Range, "range error: score '" + std::string(score_text) + "' is not a number" + at_row(row));
    }
    if (!(score >= 0.0 && score <= 1.0)) {
      throw Error(ErrorKind::Range, "range error: score outside [0,1]" + at_row(row));
    }
    const auto label_text = trim(fields[label_col]);
    if (label_text != "0" && label_text != "1") {
      throw Error(ErrorKind::Label, "label error: label '" + std::string(label_text) + "' is not 0 or 1" + at_row(row));
    }
    scores.push_back(score);
    labels.push_back(label_text == "1" ? 1 : 0);
    groups.emplace_back(trim(fields[group_col]));
  }
  if (scores.empty()) throw Error(ErrorKind::InvalidArgument, "empty dataset");
  return ScoredDataset(std::move(scores), std::move(labels), groups);
}

ScoredDataset load_csv(const std::filesystem::path& path, std::vector<std::string>* warnings) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::NotFound, "file not found: " + path.string());
  return read_csv(in, warnings);
}

void write_csv(std::ostream& out, const ScoredDataset& dataset) {
  out << "score,label,group\n";
  const auto scores = dataset.scores();
  const auto labels = dataset.labels();
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    out << format_double(scores[i]) << ',' << static_cast<int>(labels[i]) << ','
        << quote_if_needed(dataset.group_of(i)) << '\n';
  }
}

void save_csv(const std::filesystem::path& path, const ScoredDataset& dataset) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  write_csv(out, dataset);
  if (!out) throw Error(ErrorKind::Io, "write failed: " + path.string());
}

SplitDataset stratified_split(const ScoredDataset& dataset, std::array<double, 3> fractions,
                              std::uint64_t seed) {
  double sum = 0.0;
  for (double f : fractions) {
    if (!(f > 0.0)) throw Error(ErrorKind::InvalidArgument, "split fractions must be positive");
    sum += f;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw Error(ErrorKind::InvalidArgument, "split fractions must sum to 1");

  // Strata in (label, group code) order so the result is independent of row order quirks.
  std::map<std::pair<int, std::uint32_t>, std::vector<std::uint32_t>> strata;
  for (std::uint32_t i = 0; i < dataset.size(); ++i) {
    strata[{dataset.labels()[i], dataset.group_codes()[i]}].push_back(i);
  }

  std::mt19937_64 rng(seed);
  std::array<std::vector<std::uint32_t>, 3> slices;
  std::vector<std::string> warnings;
  for (auto& [key, rows] : strata) {
    std::shuffle(rows.begin(), rows.end(), rng);
    const auto n = rows.size();
    std::array<std::size_t, 3> take{};
    std::array<double, 3> remainder{};
    std::size_t assigned = 0;
    for (std::size_t s = 0; s < 3; ++s) {
      const double quota = fractions[s] * static_cast<double>(n);
      take[s] = static_cast<std::size_t>(std::floor(quota));
      remainder[s] = quota - static_cast<double>(take[s]);
      assigned += take[s];
    }
    std::array<std::size_t, 3> by_remainder{0, 1, 2};
    std::stable_sort(by_remainder.begin(), by_remainder.end(),
                     [&](std::size_t a, std::size_t b) { return remainder[a] > remainder[b]; });
    for (std::size_t k = 0; assigned < n; ++k, ++assigned) ++take[by_remainder[k % 3]];

    if (take[0] == 0 || take[1] == 0 || take[2] == 0) {
      warnings.push_back("stratum (label=" + std::to_string(key.first) + ", group=" +
                         dataset.group_names()[key.second] + ") of size " + std::to_string(n) +
                         " cannot populate every slice");
    }
    std::size_t pos = 0;
    for (std::size_t s = 0; s < 3; ++s) {
      slices[s].insert(slices[s].end(), rows.begin() + static_cast<std::ptrdiff_t>(pos),
                       rows.begin() + static_cast<std::ptrdiff_t>(pos + take[s]));
      pos += take[s];
    }
  }
  static constexpr const char* kNames[] = {"train", "validation", "test"};
  for (std::size_t s = 0; s < 3; ++s) {
    if (slices[s].empty()) {
      throw Error(ErrorKind::InvalidArgument, std::string("split produced an empty ") + kNames[s] + " slice");
    }
    std::sort(slices[s].begin(), slices[s].end());
  }
  return SplitDataset{dataset.subset(slices[0]), dataset.subset(slices[1]), dataset.subset(slices[2]),
                      fractions, seed, std::move(slices), std::move(warnings)};
}

ScoredDataset generate_synthetic(const SyntheticSpec& spec) {
  if (spec.groups.empty()) throw Error(ErrorKind::InvalidArgument, "synthetic spec needs at least one group");
  std::mt19937_64 rng(spec.seed);
  std::vector<double> scores;
  std::vector<std::uint8_t> labels;
  std::vector<std::uint32_t> codes;
  std::vector<std::string> names;
  for (std::uint32_t g = 0; g < spec.groups.size(); ++g) {
    const auto& group = spec.groups[g];
    if (group.size < 1) throw Error(ErrorKind::InvalidArgument, "synthetic group sizes must be >= 1");
    if (!(group.shape_a > 0.0 && group.shape_b > 0.0)) {
      throw Error(ErrorKind::InvalidArgument, "Beta shape parameters must be positive");
    }
    names.push_back(group.name.empty() ? std::string(1, static_cast<char>('A' + g % 26)) : group.name);
    std::gamma_distribution<double> ga(group.shape_a, 1.0);
    std::gamma_distribution<double> gb(group.shape_b, 1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (std::size_t i = 0; i < group.size; ++i) {
      const double x = ga(rng);
      const double y = gb(rng);
      const double s = (x + y) > 0.0 ? x / (x + y) : 0.5;
      scores.push_back(std::clamp(s, 0.0, 1.0));
      labels.push_back(unit(rng) < s ? 1 : 0);
      codes.push_back(g);
    }
  }
  return ScoredDataset(std::move(scores), std::move(labels), std::move(codes), std::move(names));
}

namespace {

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

void check_features(const FeatureMatrix& x, std::span<const std::uint8_t> labels) {
  if (x.values.size() != x.rows * x.cols) throw Error(ErrorKind::InvalidArgument, "feature matrix shape mismatch");
  if (labels.size() != x.rows) throw Error(ErrorKind::InvalidArgument, "labels do not match feature rows");
  for (double v : x.values) {
    if (!std::isfinite(v)) throw Error(ErrorKind::InvalidArgument, "non-finite feature value");
  }
  for (auto l : labels) {
    if (l > 1) throw Error(ErrorKind::Label, "label error: labels must be 0 or 1");
  }
}

double linear(std::span<const double> row, std::span<const double> w, double b) {
  double z = b;
  for (std::size_t j = 0; j < row.size(); ++j) z += row[j] * w[j];
  return z;
}

}  // namespace

FeatureMatrix standardize(const FeatureMatrix& features, std::vector<double>* mean_out,
                          std::vector<double>* scale_out) {
  std::vector<double> mean(features.cols, 0.0), scale(features.cols, 1.0);
  const double n = static_cast<double>(std::max<std::size_t>(features.rows, 1));
  for (std::size_t i = 0; i < features.rows; ++i) {
    for (std::size_t j = 0; j < features.cols; ++j) mean[j] += features.row(i)[j] / n;
  }
  std::vector<double> var(features.cols, 0.0);
  for (std::size_t i = 0; i < features.rows; ++i) {
    for (std::size_t j = 0; j < features.cols; ++j) {
      const double d = features.row(i)[j] - mean[j];
      var[j] += d * d / n;
    }
  }
  for (std::size_t j = 0; j < features.cols; ++j) {
    if (var[j] > 1e-24) scale[j] = std::sqrt(var[j]);
  }
  FeatureMatrix out{features.rows, features.cols, features.values};
  for (std::size_t i = 0; i < out.rows; ++i) {
    for (std::size_t j = 0; j < out.cols; ++j) {
      auto& v = out.values[i * out.cols + j];
      v = (v - mean[j]) / scale[j];
    }
  }
  if (mean_out) *mean_out = std::move(mean);
  if (scale_out) *scale_out = std::move(scale);
  return out;
}

double logistic_objective(const FeatureMatrix& x, std::span<const std::uint8_t> labels,
                          std::span<const double> weights, double bias) {
  double total = 0.0;
  for (std::size_t i = 0; i < x.rows; ++i) {
    const double z = linear(x.row(i), weights, bias);
    // log(1 + e^z) - y z, computed stably.
    const double softplus = z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
    total += softplus - labels[i] * z;
  }
  return total / static_cast<double>(x.rows);
}

std::vector<double> logistic_gradient(const FeatureMatrix& x, std::span<const std::uint8_t> labels,
                                      std::span<const double> weights, double bias) {
  std::vector<double> grad(x.cols + 1, 0.0);
  const double n = static_cast<double>(x.rows);
  for (std::size_t i = 0; i < x.rows; ++i) {
    const auto row = x.row(i);
    const double err = sigmoid(linear(row, weights, bias)) - labels[i];
    for (std::size_t j = 0; j < x.cols; ++j) grad[j] += err * row[j] / n;
    grad[x.cols] += err / n;
  }
  return grad;
}

std::vector<double> LogisticModel::predict(const FeatureMatrix& features) const {
  std::vector<double> out(features.rows);
  std::vector<double> z(features.cols);
  for (std::size_t i = 0; i < features.rows; ++i) {
    const auto row = features.row(i);
    for (std::size_t j = 0; j < features.cols; ++j) z[j] = (row[j] - mean[j]) / scale[j];
    out[i] = sigmoid(linear(z, weights, bias));
  }
  return out;
}

LogisticModel fit_logistic(const FeatureMatrix& features, std::span<const std::uint8_t> labels,
                           const LogisticFitOptions& options) {
  check_features(features, labels);
  if (features.rows == 0) throw Error(ErrorKind::InvalidArgument, "no training rows");
  LogisticModel model;
  const auto x = standardize(features, &model.mean, &model.scale);
  model.weights.assign(x.cols, 0.0);

  std::mt19937_64 rng(options.seed);
  std::vector<std::uint32_t> order(x.rows);
  std::iota(order.begin(), order.end(), 0u);
  const bool mini = options.batch_size > 0 && options.batch_size < x.rows;

  for (std::size_t it = 0; it < options.iterations; ++it) {
    std::vector<double> grad;
    if (!mini) {
      grad = logistic_gradient(x, labels, model.weights, model.bias);
    } else {
      std::shuffle(order.begin(), order.end(), rng);
      FeatureMatrix batch{options.batch_size, x.cols, {}};
      std::vector<std::uint8_t> batch_labels;
      for (std::size_t k = 0; k < options.batch_size; ++k) {
        const auto r = x.row(order[k]);
        batch.values.insert(batch.values.end(), r.begin(), r.end());
        batch_labels.push_back(labels[order[k]]);
      }
      grad = logistic_gradient(batch, batch_labels, model.weights, model.bias);
    }
    for (std::size_t j = 0; j < x.cols; ++j) model.weights[j] -= options.learning_rate * grad[j];
    model.bias -= options.learning_rate * grad[x.cols];
  }
  return model;
}

std::vector<double> demo_logistic_scorer(const FeatureMatrix& features,
                                         std::span<const std::uint8_t> labels,
                                         const LogisticFitOptions& options) {
  return fit_logistic(features, labels, options).predict(features);
}

}  // namespace capgate
