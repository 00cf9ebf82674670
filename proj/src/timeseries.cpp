#include "tssr/timeseries.hpp"

#include "tssr/errors.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <ctime>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

namespace tssr {

TimeSeries::TimeSeries(Vector values, double step, double start_time, std::string name)
    : values_(std::move(values)), step_(step), start_time_(start_time), name_(std::move(name)) {
  require(std::isfinite(step_) && step_ > 0.0, ErrorKind::InvalidArgument, "series step must be positive");
  require(values_.size() >= 2, ErrorKind::InvalidArgument, "series needs at least 2 samples");
  for (Index k = 0; k < values_.size(); ++k)
    require(std::isfinite(values_(k)), ErrorKind::Data, "non-finite value at sample " + std::to_string(k));
}

TimeSeries TimeSeries::slice(Index start, Index count) const {
  require(start >= 0 && start + count <= size(), ErrorKind::Shape, "slice out of range");
  return TimeSeries(values_.segment(start, count), step_, time_at(start), name_);
}

TimeSeries TimeSeries::with_values(Vector values) const {
  return TimeSeries(std::move(values), step_, start_time_, name_);
}

void ResamplingTask::validate() const {
  require(factor >= 2, ErrorKind::InvalidArgument, "resampling factor must be >= 2");
  require(window_samples >= 2, ErrorKind::InvalidArgument, "window_samples must be >= 2");
}

BlockMode parse_block_mode(std::string_view text) {
  if (text == "mean") return BlockMode::Mean;
  if (text == "point") return BlockMode::Point;
  fail(ErrorKind::InvalidArgument, "unknown block mode: " + std::string(text));
}

std::string_view to_string(BlockMode mode) { return mode == BlockMode::Mean ? "mean" : "point"; }

// ---------------------------------------------------------------------------
// CSV

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\"");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\"");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) out.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

bool parse_double(std::string_view text, double& out) {
  if (text.empty()) return false;
  std::string buf(text);
  char* end = nullptr;
  out = std::strtod(buf.c_str(), &end);
  return end == buf.c_str() + buf.size();
}

int parse_int(std::string_view s, std::size_t pos, std::size_t len) {
  int v = 0;
  const auto r = std::from_chars(s.data() + pos, s.data() + pos + len, v);
  require(r.ec == std::errc() && r.ptr == s.data() + pos + len, ErrorKind::Data,
          "bad timestamp field in '" + std::string(s) + "'");
  return v;
}

}  // namespace

double parse_timestamp(std::string_view text) {
  double epoch = 0.0;
  if (parse_double(text, epoch)) return epoch;
  // YYYY-MM-DD[T ]HH:MM[:SS[.fff]][Z|+hh:mm|-hh:mm]
  require(text.size() >= 16 && text[4] == '-' && text[7] == '-' && (text[10] == 'T' || text[10] == ' ') &&
              text[13] == ':',
          ErrorKind::Data, "unrecognized timestamp '" + std::string(text) + "'");
  std::tm tm{};
  tm.tm_year = parse_int(text, 0, 4) - 1900;
  tm.tm_mon = parse_int(text, 5, 2) - 1;
  tm.tm_mday = parse_int(text, 8, 2);
  tm.tm_hour = parse_int(text, 11, 2);
  tm.tm_min = parse_int(text, 14, 2);
  std::size_t pos = 16;
  double seconds = 0.0;
  if (pos < text.size() && text[pos] == ':') {
    std::size_t end = pos + 1;
    while (end < text.size() && (std::isdigit(static_cast<unsigned char>(text[end])) || text[end] == '.')) ++end;
    require(parse_double(text.substr(pos + 1, end - pos - 1), seconds), ErrorKind::Data,
            "bad seconds in timestamp '" + std::string(text) + "'");
    pos = end;
  }
  double offset = 0.0;
  if (pos < text.size()) {
    if (text[pos] == 'Z') {
      ++pos;
    } else if (text[pos] == '+' || text[pos] == '-') {
      const double sign = text[pos] == '+' ? 1.0 : -1.0;
      require(text.size() >= pos + 6 && text[pos + 3] == ':', ErrorKind::Data,
              "bad UTC offset in timestamp '" + std::string(text) + "'");
      offset = sign * (parse_int(text, pos + 1, 2) * 3600.0 + parse_int(text, pos + 4, 2) * 60.0);
      pos += 6;
    }
  }
  require(pos == text.size(), ErrorKind::Data, "trailing characters in timestamp '" + std::string(text) + "'");
  return static_cast<double>(timegm(&tm)) + seconds - offset;
}

TimeSeries load_csv(const std::filesystem::path& path, const std::string& column, double step_hint) {
  std::ifstream in(path);
  require(in.good(), ErrorKind::Io, "cannot open CSV file " + path.string());
  std::string line;
  require(static_cast<bool>(std::getline(in, line)), ErrorKind::Data, "CSV file is empty: " + path.string());
  const auto header = split_line(line);
  require(header.size() >= 2, ErrorKind::Data, "CSV header needs a timestamp and a value column");
  const auto it = std::find(header.begin() + 1, header.end(), column);
  require(it != header.end(), ErrorKind::Data, "CSV column '" + column + "' not found in " + path.string());
  const auto col = static_cast<std::size_t>(it - header.begin());

  std::vector<std::pair<double, double>> rows;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    ++row;
    const auto cells = split_line(line);
    require(cells.size() > col, ErrorKind::Data, "row " + std::to_string(row) + ": missing value column");
    double value = 0.0;
    const bool ok = parse_double(cells[col], value);
    require(ok && std::isfinite(value), ErrorKind::Data,
            "row " + std::to_string(row) + ": non-finite or unparsable value '" + cells[col] + "'");
    rows.emplace_back(parse_timestamp(cells[0]), value);
  }
  require(rows.size() >= 2, ErrorKind::Data, "CSV needs at least 2 data rows");
  std::stable_sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) { return a.first < b.first; });

  const double step = rows[1].first - rows[0].first;
  require(step > 0.0, ErrorKind::Data, "duplicate timestamps in rows 1-2");
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const double gap = rows[i].first - rows[i - 1].first;
    require(std::abs(gap - step) <= 1e-6 * step, ErrorKind::Data,
            "non-uniform spacing at row " + std::to_string(i + 1) + ": gap " + std::to_string(gap) + " s vs step " +
                std::to_string(step) + " s");
  }
  if (step_hint > 0.0)
    require(std::abs(step - step_hint) <= 1e-6 * step_hint, ErrorKind::Data,
            "inferred step " + std::to_string(step) + " s does not match hint " + std::to_string(step_hint) + " s");

  Vector values(static_cast<Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) values(static_cast<Index>(i)) = rows[i].second;
  return TimeSeries(std::move(values), step, rows[0].first, column);
}

void write_csv(const std::filesystem::path& path, const TimeSeries& s, const std::string& column) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  require(out.good(), ErrorKind::Io, "cannot write CSV file " + path.string());
  out << "timestamp," << column << '\n';
  char buf[64];
  for (Index k = 0; k < s.size(); ++k) {
    const double t = s.time_at(k);
    if (t == std::floor(t) && std::abs(t) < 1e15)
      std::snprintf(buf, sizeof buf, "%.0f", t);
    else
      std::snprintf(buf, sizeof buf, "%.6f", t);
    out << buf << ',';
    std::snprintf(buf, sizeof buf, "%.17g", s[k]);
    out << buf << '\n';
  }
}

// ---------------------------------------------------------------------------
// Resolution transforms

namespace {

Vector block_collapse(const Vector& v, int factor, BlockMode mode, const char* op) {
  require(factor >= 1, ErrorKind::InvalidArgument, std::string(op) + ": factor must be positive");
  require(v.size() % factor == 0, ErrorKind::Shape,
          std::string(op) + ": length " + std::to_string(v.size()) + " not divisible by factor " + std::to_string(factor));
  const Index n = v.size() / factor;
  Vector out(n);
  for (Index k = 0; k < n; ++k)
    out(k) = mode == BlockMode::Mean ? v.segment(k * factor, factor).mean() : v(k * factor);
  return out;
}

}  // namespace

TimeSeries downsample(const TimeSeries& s, int factor, BlockMode mode) {
  return TimeSeries(block_collapse(s.values(), factor, mode, "downsample"), s.step() * factor, s.start_time(), s.name());
}

Vector linear_init(const Vector& values, int factor) {
  require(factor >= 2, ErrorKind::InvalidArgument, "linear_init: factor must be >= 2");
  require(values.size() >= 2, ErrorKind::InvalidArgument, "linear_init: need at least 2 samples");
  const Index n = values.size();
  Vector out(n * factor);
  for (Index k = 0; k + 1 < n; ++k)
    for (int j = 0; j < factor; ++j) {
      const double w = static_cast<double>(j) / factor;
      out(k * factor + j) = j == 0 ? values(k) : (1.0 - w) * values(k) + w * values(k + 1);
    }
  out.tail(factor).setConstant(values(n - 1));
  return out;
}

TimeSeries linear_init(const TimeSeries& s, int factor) {
  return TimeSeries(linear_init(s.values(), factor), s.step() / factor, s.start_time(), s.name());
}

TimeSeries window_align(const TimeSeries& fine, int factor, BlockMode mode) {
  return TimeSeries(block_collapse(fine.values(), factor, mode, "window_align"), fine.step() * factor,
                    fine.start_time(), fine.name());
}

// ---------------------------------------------------------------------------
// Synthetic waveforms

WaveformKind parse_waveform_kind(std::string_view text) {
  if (text == "line") return WaveformKind::Line;
  if (text == "square") return WaveformKind::Square;
  if (text == "sine") return WaveformKind::Sine;
  if (text == "triangle") return WaveformKind::Triangle;
  fail(ErrorKind::InvalidArgument, "unknown waveform kind: " + std::string(text));
}

namespace {

double waveform_value(WaveformKind kind, Index k, Index n, double period, double amplitude) {
  const double kd = static_cast<double>(k);
  switch (kind) {
    case WaveformKind::Line: return amplitude * kd / static_cast<double>(n - 1);
    case WaveformKind::Square: return std::fmod(kd, period) < period / 2.0 ? amplitude : -amplitude;
    case WaveformKind::Sine: {
      // Exact zeros and peaks at quarter periods.
      const double u = std::fmod(kd, period) / period;
      if (u == 0.0 || u == 0.5) return 0.0;
      if (u == 0.25) return amplitude;
      if (u == 0.75) return -amplitude;
      return amplitude * std::sin(2.0 * std::numbers::pi * u);
    }
    case WaveformKind::Triangle: {
      const double u = std::fmod(kd, period) / period;
      if (u < 0.25) return amplitude * 4.0 * u;
      if (u < 0.75) return amplitude * (2.0 - 4.0 * u);
      return amplitude * (4.0 * u - 4.0);
    }
  }
  return 0.0;
}

void add_noise(Vector& v, double noise_std, std::uint64_t seed) {
  require(noise_std >= 0.0, ErrorKind::InvalidArgument, "noise_std must be >= 0");
  if (noise_std == 0.0) return;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> dist(0.0, noise_std);
  for (Index k = 0; k < v.size(); ++k) v(k) += dist(rng);
}

}  // namespace

TimeSeries synth_waveform(WaveformKind kind, Index n, double period, double amplitude, double noise_std,
                          std::uint64_t seed, double step) {
  require(n >= 2, ErrorKind::InvalidArgument, "synth_waveform: n must be >= 2");
  if (kind != WaveformKind::Line)
    require(period >= 2.0, ErrorKind::InvalidArgument, "synth_waveform: period must be >= 2 samples");
  Vector v(n);
  for (Index k = 0; k < n; ++k) v(k) = waveform_value(kind, k, n, period, amplitude);
  add_noise(v, noise_std, seed);
  return TimeSeries(std::move(v), step, 0.0, "synthetic");
}

TimeSeries synth_mixture(std::span<const WaveformComponent> components, Index n, double noise_std, std::uint64_t seed,
                         double step) {
  require(n >= 2, ErrorKind::InvalidArgument, "synth_mixture: n must be >= 2");
  Vector v = Vector::Zero(n);
  for (const auto& c : components) {
    if (c.kind != WaveformKind::Line)
      require(c.period >= 2.0, ErrorKind::InvalidArgument, "synth_mixture: period must be >= 2 samples");
    for (Index k = 0; k < n; ++k) v(k) += waveform_value(c.kind, k, n, c.period, c.amplitude);
  }
  add_noise(v, noise_std, seed);
  return TimeSeries(std::move(v), step, 0.0, "synthetic");
}

// ---------------------------------------------------------------------------
// Dataset

namespace {
thread_local int loss_path_depth = 0;
}

LossPathGuard::LossPathGuard() { ++loss_path_depth; }
LossPathGuard::~LossPathGuard() { --loss_path_depth; }
bool LossPathGuard::active() { return loss_path_depth > 0; }

SeriesDataset::SeriesDataset(ResamplingTask task, Normalization norm, std::vector<Window> train,
                             std::vector<Window> test, std::vector<TimeSeries> train_reference,
                             std::vector<TimeSeries> test_reference)
    : task_(task),
      norm_(norm),
      train_(std::move(train)),
      test_(std::move(test)),
      train_ref_(std::move(train_reference)),
      test_ref_(std::move(test_reference)),
      audit_(std::make_shared<Audit>()) {
  require(!train_.empty() && !test_.empty(), ErrorKind::Data, "dataset needs non-empty train and test splits");
  if (!train_ref_.empty())
    require(train_ref_.size() == train_.size() && test_ref_.size() == test_.size(), ErrorKind::Data,
            "reference window count must match input windows");
  for (const auto* split : {&train_, &test_})
    for (const auto& w : *split)
      require(w.init.size() == static_cast<Index>(task_.output_samples()), ErrorKind::Shape,
              "init window length must equal window_samples * factor");
}

const TimeSeries& SeriesDataset::reference(Split split, std::size_t index) const {
  if (LossPathGuard::active()) {
    audit_->violations.fetch_add(1);
    fail(ErrorKind::Audit, "reference window read inside a training loss path");
  }
  require(has_reference(), ErrorKind::Precondition, "dataset has no reference series");
  const auto& refs = split == Split::Train ? train_ref_ : test_ref_;
  require(index < refs.size(), ErrorKind::InvalidArgument, "reference index out of range");
  audit_->reads.fetch_add(1);
  return refs[index];
}

SeriesDataset make_dataset(const TimeSeries& s, const ResamplingTask& task, double split_fraction,
                           const std::optional<TimeSeries>& reference) {
  task.validate();
  require(split_fraction > 0.0 && split_fraction < 1.0, ErrorKind::InvalidArgument,
          "split_fraction must lie in (0, 1)");
  const Index w = task.window_samples;
  require(s.size() >= 2 * w, ErrorKind::Data,
          "series of " + std::to_string(s.size()) + " samples is shorter than two windows of " + std::to_string(w));
  const Index n_windows = s.size() / w;
  const auto n_train = static_cast<Index>(std::floor(split_fraction * static_cast<double>(n_windows) + 1e-9));
  require(n_train >= 1 && n_train < n_windows, ErrorKind::Data, "split leaves an empty train or test set");

  if (reference) {
    require(std::abs(reference->step() * task.factor - s.step()) <= 1e-6 * s.step(), ErrorKind::Data,
            "reference step times factor must equal the input step");
    require(std::abs(reference->start_time() - s.start_time()) <= 1e-6 * s.step(), ErrorKind::Data,
            "reference must start at the same time as the input");
    require(reference->size() >= n_windows * w * task.factor, ErrorKind::Data,
            "reference series is shorter than the tiled input windows");
  }

  Normalization norm;
  {
    const Vector train_values = s.values().head(n_train * w);
    norm.mean = train_values.mean();
    const double var = (train_values.array() - norm.mean).square().mean();
    norm.stddev = var > 0.0 ? std::sqrt(var) : 1.0;
  }

  std::vector<Window> train, test;
  std::vector<TimeSeries> train_ref, test_ref;
  for (Index i = 0; i < n_windows; ++i) {
    const TimeSeries raw = s.slice(i * w, w);
    TimeSeries input = raw.with_values(norm.apply(raw.values()));
    TimeSeries init = linear_init(input, task.factor);
    auto& dest = i < n_train ? train : test;
    dest.push_back(Window{std::move(input), std::move(init)});
    if (reference) {
      const TimeSeries r = reference->slice(i * w * task.factor, w * task.factor);
      (i < n_train ? train_ref : test_ref).push_back(r.with_values(norm.apply(r.values())));
    }
  }
  return SeriesDataset(task, norm, std::move(train), std::move(test), std::move(train_ref), std::move(test_ref));
}

}  // namespace tssr
