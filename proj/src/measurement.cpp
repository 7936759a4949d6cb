#include "pmufdi/measurement.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

namespace pmufdi {

std::string_view to_string(ChannelKind kind) {
  return kind == ChannelKind::voltage ? "voltage" : "current";
}

ChannelKind channel_kind_from_string(std::string_view text) {
  if (text == "voltage" || text == "V") return ChannelKind::voltage;
  if (text == "current" || text == "I") return ChannelKind::current;
  throw ParseError("unknown channel kind '" + std::string(text) + "'");
}

MeasurementMatrix::MeasurementMatrix(std::size_t rows,
                                     std::vector<ChannelMeta> meta,
                                     double rate_hz)
    : rows_(rows), meta_(std::move(meta)), rate_hz_(rate_hz) {
  if (rows_ == 0 || meta_.empty()) {
    throw DimensionError("measurement matrix needs at least one row and one channel");
  }
  if (!(rate_hz_ > 0.0) || !std::isfinite(rate_hz_)) {
    throw std::invalid_argument("sampling rate must be positive");
  }
  data_.assign(rows_ * meta_.size(), Phasor{});
}

MeasurementMatrix::MeasurementMatrix(std::size_t rows, std::size_t channels,
                                     double rate_hz)
    : MeasurementMatrix(rows, std::vector<ChannelMeta>(channels), rate_hz) {}

Phasor MeasurementMatrix::at(std::size_t t, std::size_t channel) const {
  if (t >= rows_ || channel >= meta_.size()) {
    throw std::out_of_range("measurement index out of range");
  }
  return (*this)(t, channel);
}

void MeasurementMatrix::set(std::size_t t, std::size_t channel, Phasor z) {
  if (t >= rows_ || channel >= meta_.size()) {
    throw std::out_of_range("measurement index out of range");
  }
  require_finite(z, "measurement");
  data_[t * meta_.size() + channel] = z;
}

std::span<const Phasor> MeasurementMatrix::row(std::size_t t) const {
  if (t >= rows_) throw std::out_of_range("row index out of range");
  return std::span<const Phasor>(data_).subspan(t * meta_.size(), meta_.size());
}

std::vector<Phasor> MeasurementMatrix::column(std::size_t channel) const {
  if (channel >= meta_.size()) throw std::out_of_range("channel out of range");
  std::vector<Phasor> out(rows_);
  for (std::size_t t = 0; t < rows_; ++t) out[t] = (*this)(t, channel);
  return out;
}

std::string format_double(double value) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  if (ec != std::errc{}) throw std::runtime_error("double formatting failed");
  return std::string(buf, ptr);
}

StreamFormat format_from_path(const std::filesystem::path& path) {
  return path.extension() == ".jsonl" ? StreamFormat::jsonl : StreamFormat::csv;
}

namespace {

struct Cell {
  std::int64_t t;
  std::int64_t channel;
  Phasor z;
};

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

template <class T>
T parse_number(std::string_view field, std::size_t line_no) {
  field = trim(field);
  T value{};
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc{} || ptr != field.data() + field.size() || field.empty()) {
    throw ParseError("line " + std::to_string(line_no) + ": cannot parse '" +
                     std::string(field) + "'");
  }
  return value;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (true) {
    const std::size_t next = s.find(sep, pos);
    out.push_back(s.substr(pos, next == std::string_view::npos ? s.npos : next - pos));
    if (next == std::string_view::npos) break;
    pos = next + 1;
  }
  return out;
}

// Key=value tokens of a `#` metadata line.
void parse_meta_line(std::string_view line, double& rate,
                     std::vector<std::pair<std::int64_t, ChannelMeta>>& meta,
                     std::size_t line_no) {
  line.remove_prefix(1);
  std::int64_t channel = -1;
  ChannelMeta cm;
  bool is_channel = false;
  for (auto tok : split(trim(line), ' ')) {
    tok = trim(tok);
    if (tok.empty()) continue;
    const auto eq = tok.find('=');
    if (eq == std::string_view::npos) continue;  // free-form comment
    const auto key = tok.substr(0, eq);
    const auto val = tok.substr(eq + 1);
    if (key == "rate_hz") {
      rate = parse_number<double>(val, line_no);
    } else if (key == "channel") {
      channel = parse_number<std::int64_t>(val, line_no);
      is_channel = true;
    } else if (key == "pmu") {
      cm.pmu_id = parse_number<int>(val, line_no);
    } else if (key == "kind") {
      cm.kind = channel_kind_from_string(val);
    }
  }
  if (is_channel) meta.emplace_back(channel, cm);
}

MeasurementMatrix assemble(std::vector<Cell>& cells, double rate,
                           std::vector<std::pair<std::int64_t, ChannelMeta>>& meta_lines) {
  if (cells.empty()) throw ParseError("stream contains no samples");
  std::int64_t max_t = -1;
  std::int64_t max_c = -1;
  for (const auto& c : cells) {
    if (c.t < 0 || c.channel < 0) throw ParseError("negative time or channel index");
    max_t = std::max(max_t, c.t);
    max_c = std::max(max_c, c.channel);
  }
  const auto rows = static_cast<std::size_t>(max_t + 1);
  std::size_t channels = static_cast<std::size_t>(max_c + 1);
  std::vector<ChannelMeta> meta(channels);
  if (!meta_lines.empty()) {
    if (meta_lines.size() != channels) {
      throw ParseError("channel metadata lists " + std::to_string(meta_lines.size()) +
                       " channels but samples use " + std::to_string(channels));
    }
    for (const auto& [idx, cm] : meta_lines) {
      if (idx < 0 || static_cast<std::size_t>(idx) >= channels) {
        throw ParseError("channel metadata index out of range");
      }
      meta[static_cast<std::size_t>(idx)] = cm;
    }
  }
  MeasurementMatrix m(rows, std::move(meta), rate);
  std::vector<std::uint8_t> seen(rows * channels, 0);
  for (const auto& c : cells) {
    const std::size_t k = static_cast<std::size_t>(c.t) * channels +
                          static_cast<std::size_t>(c.channel);
    if (seen[k]) {
      throw ParseError("duplicate sample t=" + std::to_string(c.t) +
                       " channel=" + std::to_string(c.channel));
    }
    seen[k] = 1;
    m.set(static_cast<std::size_t>(c.t), static_cast<std::size_t>(c.channel), c.z);
  }
  if (cells.size() != rows * channels) {
    for (std::size_t k = 0; k < seen.size(); ++k) {
      if (!seen[k]) {
        throw ParseError("missing sample t=" + std::to_string(k / channels) +
                         " channel=" + std::to_string(k % channels) +
                         " (inconsistent channel count across timestamps)");
      }
    }
  }
  return m;
}

MeasurementMatrix read_csv(std::istream& in) {
  std::vector<Cell> cells;
  std::vector<std::pair<std::int64_t, ChannelMeta>> meta;
  double rate = 30.0;
  bool header_seen = false;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view sv = trim(line);
    if (sv.empty()) continue;
    if (sv.front() == '#') {
      parse_meta_line(sv, rate, meta, line_no);
      continue;
    }
    if (!header_seen) {
      if (sv != "t,channel,re,im") {
        throw ParseError("line " + std::to_string(line_no) +
                         ": expected header 't,channel,re,im'");
      }
      header_seen = true;
      continue;
    }
    const auto fields = split(sv, ',');
    if (fields.size() != 4) {
      throw ParseError("line " + std::to_string(line_no) + ": expected 4 fields, got " +
                       std::to_string(fields.size()));
    }
    Cell c{parse_number<std::int64_t>(fields[0], line_no),
           parse_number<std::int64_t>(fields[1], line_no),
           {parse_number<double>(fields[2], line_no),
            parse_number<double>(fields[3], line_no)}};
    if (!is_finite(c.z)) {
      throw NonFiniteError("line " + std::to_string(line_no) + ": non-finite value");
    }
    cells.push_back(c);
  }
  if (!header_seen) throw ParseError("missing CSV header 't,channel,re,im'");
  return assemble(cells, rate, meta);
}

MeasurementMatrix read_jsonl(std::istream& in) {
  using nlohmann::json;
  std::vector<Cell> cells;
  std::vector<std::pair<std::int64_t, ChannelMeta>> meta;
  double rate = 30.0;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::exception& e) {
      throw ParseError("line " + std::to_string(line_no) + ": " + e.what());
    }
    if (!obj.is_object()) {
      throw ParseError("line " + std::to_string(line_no) + ": expected an object");
    }
    try {
      if (!obj.contains("t")) {
        if (obj.contains("rate_hz")) rate = obj.at("rate_hz").get<double>();
        if (obj.contains("channels")) {
          std::int64_t idx = 0;
          for (const auto& ch : obj.at("channels")) {
            ChannelMeta cm;
            cm.pmu_id = ch.at("pmu").get<int>();
            cm.kind = channel_kind_from_string(ch.at("kind").get<std::string>());
            meta.emplace_back(idx++, cm);
          }
        }
        continue;
      }
      Cell c{obj.at("t").get<std::int64_t>(), obj.at("channel").get<std::int64_t>(),
             {obj.at("re").get<double>(), obj.at("im").get<double>()}};
      if (!is_finite(c.z)) {
        throw NonFiniteError("line " + std::to_string(line_no) + ": non-finite value");
      }
      cells.push_back(c);
    } catch (const json::exception& e) {
      throw ParseError("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return assemble(cells, rate, meta);
}

}  // namespace

MeasurementMatrix read_stream(std::istream& in, StreamFormat format) {
  return format == StreamFormat::csv ? read_csv(in) : read_jsonl(in);
}

void write_stream(std::ostream& out, const MeasurementMatrix& m,
                  StreamFormat format) {
  const std::size_t n = m.rows();
  const std::size_t k = m.channels();
  if (format == StreamFormat::csv) {
    out << "# rate_hz=" << format_double(m.rate_hz()) << '\n';
    for (std::size_t j = 0; j < k; ++j) {
      out << "# channel=" << j << " pmu=" << m.meta()[j].pmu_id
          << " kind=" << to_string(m.meta()[j].kind) << '\n';
    }
    out << "t,channel,re,im\n";
    std::string buf;
    for (std::size_t t = 0; t < n; ++t) {
      for (std::size_t j = 0; j < k; ++j) {
        const Phasor z = m(t, j);
        buf.clear();
        buf += std::to_string(t);
        buf += ',';
        buf += std::to_string(j);
        buf += ',';
        buf += format_double(z.real());
        buf += ',';
        buf += format_double(z.imag());
        buf += '\n';
        out << buf;
      }
    }
    return;
  }
  using nlohmann::json;
  json header;
  header["rate_hz"] = m.rate_hz();
  header["channels"] = json::array();
  for (const auto& cm : m.meta()) {
    header["channels"].push_back({{"pmu", cm.pmu_id}, {"kind", to_string(cm.kind)}});
  }
  out << header.dump() << '\n';
  for (std::size_t t = 0; t < n; ++t) {
    for (std::size_t j = 0; j < k; ++j) {
      const Phasor z = m(t, j);
      out << "{\"t\":" << t << ",\"channel\":" << j << ",\"re\":"
          << format_double(z.real()) << ",\"im\":" << format_double(z.imag())
          << "}\n";
    }
  }
}

MeasurementMatrix load_stream(const std::filesystem::path& path,
                              StreamFormat format) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  return read_stream(in, format);
}

MeasurementMatrix load_stream(const std::filesystem::path& path) {
  return load_stream(path, format_from_path(path));
}

void save_stream(const MeasurementMatrix& m, const std::filesystem::path& path,
                 StreamFormat format) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  write_stream(out, m, format);
  if (!out) throw IoError("write failed for " + path.string());
}

void save_stream(const MeasurementMatrix& m, const std::filesystem::path& path) {
  save_stream(m, path, format_from_path(path));
}

}  // namespace pmufdi
