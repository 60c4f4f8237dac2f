#include "freqcast/data.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>
#include <stdexcept>

namespace freqcast::data {

Index SeriesFrame::channel_index(const std::string& col) const {
    for (std::size_t i = 0; i < channel_names.size(); ++i)
        if (channel_names[i] == col) return static_cast<Index>(i);
    throw std::invalid_argument("column '" + col + "' not found in " + name);
}

Index SeriesFrame::target_index() const { return channel_index(target); }

SeriesFrame SeriesFrame::slice(Index begin, Index end) const {
    if (begin < 0 || end > length() || begin > end) throw std::out_of_range("slice outside frame");
    SeriesFrame out;
    out.name = name;
    out.channel_names = channel_names;
    out.target = target;
    out.values = values.middleRows(begin, end - begin);
    if (!timestamps.empty())
        out.timestamps.assign(timestamps.begin() + begin, timestamps.begin() + end);
    return out;
}

namespace {

// One record per call; handles quoted fields with "" escapes and embedded
// newlines. Returns false at end of input.
bool next_record(const std::string& text, std::size_t& pos, std::vector<std::string>& fields) {
    fields.clear();
    if (pos >= text.size()) return false;
    std::string field;
    bool quoted = false;
    while (pos < text.size()) {
        const char c = text[pos];
        if (quoted) {
            if (c == '"') {
                if (pos + 1 < text.size() && text[pos + 1] == '"') {
                    field += '"';
                    pos += 2;
                    continue;
                }
                quoted = false;
                ++pos;
                continue;
            }
            field += c;
            ++pos;
            continue;
        }
        if (c == '"') {
            quoted = true;
            ++pos;
        } else if (c == ',') {
            fields.push_back(std::move(field));
            field.clear();
            ++pos;
        } else if (c == '\r' || c == '\n') {
            ++pos;
            if (c == '\r' && pos < text.size() && text[pos] == '\n') ++pos;
            break;
        } else {
            field += c;
            ++pos;
        }
    }
    if (quoted) throw std::runtime_error("unterminated quoted field");
    fields.push_back(std::move(field));
    return true;
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t");
    return s.substr(b, e - b + 1);
}

bool blank(const std::vector<std::string>& fields) { return fields.size() == 1 && trim(fields[0]).empty(); }

}  // namespace

SeriesFrame parse_csv(const std::string& text, const std::string& name, const std::string& target_column) {
    std::size_t pos = 0;
    std::vector<std::string> fields;
    if (text.size() >= 3 && text.compare(0, 3, "\xEF\xBB\xBF") == 0) pos = 3;
    if (!next_record(text, pos, fields) || fields.size() < 2)
        throw std::runtime_error(name + ": header must have a time column and at least one channel");
    SeriesFrame f;
    f.name = name;
    for (std::size_t i = 1; i < fields.size(); ++i) {
        const std::string col = trim(fields[i]);
        for (const auto& existing : f.channel_names)
            if (existing == col) throw std::runtime_error(name + ": duplicate column '" + col + "'");
        f.channel_names.push_back(col);
    }
    const std::size_t width = fields.size();
    std::vector<double> flat;
    Index row = 0;
    while (next_record(text, pos, fields)) {
        if (blank(fields)) continue;
        ++row;
        if (fields.size() != width)
            throw std::runtime_error(name + ": row " + std::to_string(row) + " has " + std::to_string(fields.size()) +
                                     " fields, expected " + std::to_string(width));
        f.timestamps.push_back(trim(fields[0]));
        for (std::size_t c = 1; c < width; ++c) {
            const std::string cell = trim(fields[c]);
            double v = 0.0;
            const char* first = cell.data();
            const char* last = first + cell.size();
            if (!cell.empty() && *first == '+') ++first;
            const auto res = std::from_chars(first, last, v);
            if (cell.empty() || res.ec != std::errc() || res.ptr != last)
                throw std::runtime_error(name + ": cannot parse '" + cell + "' at row " + std::to_string(row) +
                                         ", column '" + f.channel_names[c - 1] + "'");
            flat.push_back(v);
        }
    }
    if (row == 0) throw std::runtime_error(name + ": no data rows");
    const auto channels = static_cast<Index>(width - 1);
    f.values = Eigen::Map<const RowMajorMatrix>(flat.data(), row, channels);
    f.target = target_column.empty() ? f.channel_names.back() : target_column;
    (void)f.target_index();  // throws when missing
    return f;
}

SeriesFrame load_csv(const std::string& path, const std::string& target_column) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    std::string name = path;
    if (const auto slash = name.find_last_of("/\\"); slash != std::string::npos) name = name.substr(slash + 1);
    if (const auto dot = name.find_last_of('.'); dot != std::string::npos) name = name.substr(0, dot);
    return parse_csv(buf.str(), name, target_column);
}

namespace {

std::string quote_if_needed(const std::string& s) {
    if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return {buf, res.ptr};
}

}  // namespace

std::string to_csv(const SeriesFrame& frame) {
    std::string out = "date";
    for (const auto& c : frame.channel_names) out += "," + quote_if_needed(c);
    out += "\n";
    for (Index t = 0; t < frame.length(); ++t) {
        out += frame.timestamps.empty() ? std::to_string(t) : quote_if_needed(frame.timestamps[std::size_t(t)]);
        for (Index c = 0; c < frame.channels(); ++c) out += "," + format_double(frame.values(t, c));
        out += "\n";
    }
    return out;
}

void save_csv(const SeriesFrame& frame, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << to_csv(frame);
    if (!out) throw std::runtime_error("write failed: " + path);
}

SeriesFrame clean_sentinels(const SeriesFrame& frame, double sentinel) {
    SeriesFrame out = frame;
    const Index n = frame.length();
    for (Index c = 0; c < frame.channels(); ++c) {
        auto col = out.values.col(c);
        Index prev = -1;
        Index t = 0;
        while (t < n) {
            if (col(t) != sentinel) {
                prev = t;
                ++t;
                continue;
            }
            Index next = t;
            while (next < n && col(next) == sentinel) ++next;
            if (prev < 0 && next >= n)
                throw std::runtime_error("channel '" + frame.channel_names[std::size_t(c)] + "' has no valid samples");
            for (Index k = t; k < next; ++k) {
                if (prev < 0)
                    col(k) = col(next);
                else if (next >= n)
                    col(k) = col(prev);
                else
                    col(k) = col(prev) + (col(next) - col(prev)) * double(k - prev) / double(next - prev);
            }
            t = next;
        }
    }
    return out;
}

SplitBounds split_bounds(Index total, const SplitSpec& spec) {
    SplitBounds b;
    b.total = total;
    if (spec.scheme == SplitScheme::ett_calendar) {
        const Index month = 30 * spec.samples_per_day;
        b.train_end = 12 * month;
        b.val_end = 16 * month;
        if (20 * month > total)
            throw std::invalid_argument("ett_calendar split needs " + std::to_string(20 * month) + " rows, have " +
                                        std::to_string(total));
        b.total = 20 * month;
        return b;
    }
    std::array<double, 3> r = spec.ratios;
    if (spec.scheme == SplitScheme::standard_70_10_20) r = {0.7, 0.1, 0.2};
    if (spec.scheme == SplitScheme::ett_60_20_20) r = {0.6, 0.2, 0.2};
    for (double v : r)
        if (v < 0.0) throw std::invalid_argument("split ratios must be non-negative");
    if (std::abs(r[0] + r[1] + r[2] - 1.0) > 1e-9) throw std::invalid_argument("split ratios must sum to 1");
    // Guard against products like 0.7 * 100 landing just below an integer.
    const auto train = static_cast<Index>(std::floor(r[0] * double(total) + 1e-9));
    const auto test = static_cast<Index>(std::floor(r[2] * double(total) + 1e-9));
    b.train_end = train;
    b.val_end = total - test;
    return b;
}

Splits split(const SeriesFrame& frame, const SplitSpec& spec) {
    const SplitBounds b = split_bounds(frame.length(), spec);
    for (int part = 0; part < 3; ++part)
        if (b.end(part) <= b.begin(part)) throw std::invalid_argument("split produces an empty slice");
    return {frame.slice(0, b.train_end), frame.slice(b.train_end, b.val_end), frame.slice(b.val_end, b.total), b};
}

Scaler Scaler::fit(const Matrix& values) {
    if (values.rows() < 1) throw std::invalid_argument("Scaler::fit: empty data");
    Scaler s;
    s.mean = values.colwise().mean().transpose();
    s.std.resize(values.cols());
    for (Index c = 0; c < values.cols(); ++c)
        s.std(c) = std::max(std::sqrt((values.col(c).array() - s.mean(c)).square().mean()), 1e-8);
    return s;
}

Matrix Scaler::transform(const Matrix& values) const {
    return (values.rowwise() - mean.transpose()).array().rowwise() / std.transpose().array();
}

Matrix Scaler::inverse(const Matrix& values) const {
    return (values.array().rowwise() * std.transpose().array()).matrix().rowwise() + mean.transpose();
}

SeriesFrame Scaler::transform(const SeriesFrame& frame) const {
    SeriesFrame out = frame;
    out.values = transform(frame.values);
    return out;
}

SeriesFrame Scaler::inverse(const SeriesFrame& frame) const {
    SeriesFrame out = frame;
    out.values = inverse(frame.values);
    return out;
}

Standardized standardize(const Splits& splits) {
    Standardized s;
    s.scaler = Scaler::fit(splits.train.values);
    s.splits = {s.scaler.transform(splits.train), s.scaler.transform(splits.val), s.scaler.transform(splits.test),
                splits.bounds};
    return s;
}

std::string to_string(Mode m) {
    switch (m) {
        case Mode::S: return "S";
        case Mode::MS: return "MS";
        case Mode::M: return "M";
    }
    return "M";
}

Mode mode_from_string(const std::string& s) {
    if (s == "S") return Mode::S;
    if (s == "MS") return Mode::MS;
    if (s == "M") return Mode::M;
    throw std::invalid_argument("unknown mode '" + s + "' (expected S, MS or M)");
}

WindowSet::WindowSet(std::shared_ptr<const Matrix> values, Index start, Index count, Index seq_len, Index pred_len,
                     Mode mode, Index target_channel)
    : values_(std::move(values)), start_(start), count_(count), seq_len_(seq_len), pred_len_(pred_len), mode_(mode) {
    if (seq_len < 1 || pred_len < 1) throw std::invalid_argument("window lengths must be positive");
    if (count < 1) throw std::invalid_argument("window set would be empty: series too short for seq_len + pred_len");
    if (start < 0 || start + count - 1 + seq_len + pred_len > values_->rows())
        throw std::out_of_range("windows exceed the series");
    if (target_channel < 0 || target_channel >= values_->cols()) throw std::out_of_range("target channel");
    switch (mode) {
        case Mode::S:
            inputs_ = {target_channel};
            targets_ = {target_channel};
            break;
        case Mode::MS:
            for (Index c = 0; c < values_->cols(); ++c) inputs_.push_back(c);
            targets_ = {target_channel};
            break;
        case Mode::M:
            for (Index c = 0; c < values_->cols(); ++c) inputs_.push_back(c);
            targets_ = inputs_;
            break;
    }
}

Matrix WindowSet::input(Index i) const {
    return (*values_)(Eigen::seqN(start_ + i, seq_len_), inputs_);
}

Matrix WindowSet::target(Index i) const {
    return (*values_)(Eigen::seqN(start_ + i + seq_len_, pred_len_), targets_);
}

Matrix WindowSet::full(Index i) const {
    return (*values_)(Eigen::seqN(start_ + i, seq_len_ + pred_len_), inputs_);
}

WindowSet make_windows(const SeriesFrame& frame, Index seq_len, Index pred_len, Mode mode) {
    auto values = std::make_shared<const Matrix>(frame.values);
    return make_windows(values, 0, frame.length(), seq_len, pred_len, mode, frame.target_index(), false);
}

WindowSet make_windows(std::shared_ptr<const Matrix> values, Index begin, Index end, Index seq_len, Index pred_len,
                       Mode mode, Index target_channel, bool borrow_context) {
    if (seq_len + pred_len > values->rows()) throw std::invalid_argument("seq_len + pred_len exceeds series length");
    const Index start = borrow_context ? std::max<Index>(0, begin - seq_len) : begin;
    const Index count = end - start - seq_len - pred_len + 1;
    return WindowSet(std::move(values), start, count, seq_len, pred_len, mode, target_channel);
}

namespace {

double num(const nlohmann::json& j, const char* key, double fallback) {
    return j.contains(key) ? j.at(key).get<double>() : fallback;
}

Vector component(const nlohmann::json& c, Index len, std::mt19937_64& rng, const std::string& where) {
    if (!c.is_object() || !c.contains("kind")) throw std::invalid_argument(where + ": component needs a 'kind'");
    const std::string kind = c.at("kind");
    Vector out = Vector::Zero(len);
    const double two_pi = 2.0 * std::numbers::pi;
    if (kind == "sine") {
        const double period = num(c, "period", 0.0);
        if (period <= 0.0) throw std::invalid_argument(where + ".period: must be positive");
        const double amp = num(c, "amplitude", 1.0);
        const double phase = num(c, "phase", 0.0);
        std::vector<double> harmonics{1.0};
        if (c.contains("harmonics")) harmonics = c.at("harmonics").get<std::vector<double>>();
        for (Index t = 0; t < len; ++t) {
            double v = 0.0;
            for (std::size_t k = 0; k < harmonics.size(); ++k)
                v += harmonics[k] * std::sin(two_pi * double(k + 1) * double(t) / period + phase);
            out(t) = amp * v;
        }
    } else if (kind == "drift") {
        const double slope = num(c, "slope", 0.0);
        const double intercept = num(c, "intercept", 0.0);
        for (Index t = 0; t < len; ++t) out(t) = intercept + slope * double(t);
    } else if (kind == "noise") {
        double sd = num(c, "std", 1.0);
        if (c.contains("variance")) sd = std::sqrt(c.at("variance").get<double>());
        std::normal_distribution<double> g(num(c, "mean", 0.0), sd);
        for (Index t = 0; t < len; ++t) out(t) = g(rng);
    } else if (kind == "random_walk") {
        std::normal_distribution<double> g(0.0, num(c, "step_std", 1.0));
        double level = 0.0;
        for (Index t = 0; t < len; ++t) {
            level += g(rng);
            out(t) = level;
        }
    } else if (kind == "constant") {
        out.setConstant(num(c, "value", 0.0));
    } else {
        throw std::invalid_argument(where + ".kind: unknown component '" + kind + "'");
    }
    return out;
}

}  // namespace

SeriesFrame synth_generate(const nlohmann::json& spec) {
    if (!spec.is_object()) throw std::invalid_argument("synth spec: expected a JSON object");
    if (!spec.contains("length")) throw std::invalid_argument("synth spec: missing 'length'");
    const Index len = spec.at("length").get<Index>();
    if (len < 1) throw std::invalid_argument("synth spec.length: must be positive");
    const auto seed = spec.value("seed", std::uint64_t{0});
    nlohmann::json channels;
    if (spec.contains("channels")) {
        channels = spec.at("channels");
    } else if (spec.contains("components")) {
        channels = nlohmann::json::array({{{"name", spec.value("target", std::string("OT"))},
                                           {"components", spec.at("components")}}});
    } else {
        throw std::invalid_argument("synth spec: needs 'components' or 'channels'");
    }
    if (!channels.is_array() || channels.empty()) throw std::invalid_argument("synth spec.channels: empty");

    SeriesFrame f;
    f.name = spec.value("name", std::string("synthetic"));
    f.values = Matrix::Zero(len, static_cast<Index>(channels.size()));
    for (Index t = 0; t < len; ++t) f.timestamps.push_back(std::to_string(t));
    std::uint64_t stream = 0;
    for (std::size_t ch = 0; ch < channels.size(); ++ch) {
        const auto& c = channels[ch];
        const std::string where = "synth spec.channels[" + std::to_string(ch) + "]";
        f.channel_names.push_back(c.value("name", "ch" + std::to_string(ch)));
        if (!c.contains("components") || !c.at("components").is_array())
            throw std::invalid_argument(where + ".components: expected an array");
        const auto& comps = c.at("components");
        for (std::size_t k = 0; k < comps.size(); ++k) {
            // Independent stream per component keeps each one stable when others change.
            std::mt19937_64 rng(seed * 0x9E3779B97F4A7C15ULL + (++stream));
            f.values.col(static_cast<Index>(ch)) +=
                component(comps[k], len, rng, where + ".components[" + std::to_string(k) + "]");
        }
    }
    f.target = spec.value("target", f.channel_names.back());
    (void)f.target_index();
    return f;
}

}  // namespace freqcast::data
