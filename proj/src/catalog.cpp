#include "retas/catalog.hpp"

#include "retas/errors.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace retas {

namespace {

constexpr double kTieStep = 1e-9; // days added per duplicate timestamp

std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string::npos) {
        return {};
    }
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string current;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char ch = line[i];
        if (quoted) {
            if (ch == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    current.push_back('"');
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                current.push_back(ch);
            }
        } else if (ch == '"') {
            quoted = true;
        } else if (ch == ',') {
            fields.push_back(trim(current));
            current.clear();
        } else {
            current.push_back(ch);
        }
    }
    fields.push_back(trim(current));
    return fields;
}

std::optional<double> parse_number(const std::string& text) {
    if (text.empty()) {
        return std::nullopt;
    }
    const char* begin = text.data();
    const char* end = text.data() + text.size();
    if (*begin == '+') {
        ++begin;
    }
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc{} || ptr != end) {
        return std::nullopt;
    }
    return value;
}

int parse_fixed_int(const std::string& text, std::size_t pos, std::size_t len) {
    if (pos + len > text.size()) {
        throw DataError("truncated timestamp '" + text + "'");
    }
    int value = 0;
    for (std::size_t k = pos; k < pos + len; ++k) {
        if (text[k] < '0' || text[k] > '9') {
            throw DataError("malformed timestamp '" + text + "'");
        }
        value = value * 10 + (text[k] - '0');
    }
    return value;
}

// Either an ISO-8601 timestamp or a plain number of days.
struct TimeValue {
    double value = 0.0;
    bool iso = false;
};

TimeValue parse_time_value(const std::string& text) {
    if (auto number = parse_number(text)) {
        return {*number, false};
    }
    return {parse_iso8601_days(text), true};
}

} // namespace

SpatialWindow SpatialWindow::rectangle(double x_min, double x_max, double y_min, double y_max) {
    if (!(x_min < x_max) || !(y_min < y_max)) {
        throw std::invalid_argument("rectangle window requires x_min < x_max and y_min < y_max");
    }
    SpatialWindow w;
    w.kind = Kind::Rectangle;
    w.x_min = x_min;
    w.x_max = x_max;
    w.y_min = y_min;
    w.y_max = y_max;
    return w;
}

bool SpatialWindow::contains(double x, double y) const {
    if (kind == Kind::WholePlane) {
        return std::isfinite(x) && std::isfinite(y);
    }
    return x >= x_min && x <= x_max && y >= y_min && y <= y_max;
}

CatalogFormat CatalogFormat::from_column_map(const std::string& spec) {
    CatalogFormat format;
    std::stringstream ss(spec);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (item.empty()) {
            continue;
        }
        const auto eq = item.find('=');
        if (eq == std::string::npos) {
            throw std::invalid_argument("column remap entry '" + item + "' is not key=value");
        }
        const std::string key = trim(item.substr(0, eq));
        const std::string value = trim(item.substr(eq + 1));
        if (key == "time") {
            format.time_column = value;
        } else if (key == "x") {
            format.x_column = value;
        } else if (key == "y") {
            format.y_column = value;
        } else if (key == "magnitude") {
            format.magnitude_column = value;
        } else {
            throw std::invalid_argument("unknown column '" + key + "' in remap");
        }
    }
    return format;
}

double parse_iso8601_days(const std::string& raw) {
    using namespace std::chrono;
    const std::string text = trim(raw);
    if (text.size() < 10 || text[4] != '-' || text[7] != '-') {
        throw DataError("malformed timestamp '" + text + "'");
    }
    const int yr = parse_fixed_int(text, 0, 4);
    const int mo = parse_fixed_int(text, 5, 2);
    const int dy = parse_fixed_int(text, 8, 2);
    const year_month_day ymd{year{yr}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(dy)}};
    if (!ymd.ok()) {
        throw DataError("invalid calendar date in '" + text + "'");
    }
    double seconds = 0.0;
    std::size_t pos = 10;
    if (pos < text.size() && (text[pos] == 'T' || text[pos] == ' ')) {
        const int hh = parse_fixed_int(text, pos + 1, 2);
        if (pos + 3 >= text.size() || text[pos + 3] != ':') {
            throw DataError("malformed time of day in '" + text + "'");
        }
        const int mm = parse_fixed_int(text, pos + 4, 2);
        pos += 6;
        double ss = 0.0;
        if (pos < text.size() && text[pos] == ':') {
            std::size_t end = pos + 1;
            while (end < text.size() && ((text[end] >= '0' && text[end] <= '9') || text[end] == '.')) {
                ++end;
            }
            const auto parsed = parse_number(text.substr(pos + 1, end - pos - 1));
            if (!parsed || *parsed < 0.0 || *parsed >= 61.0) {
                throw DataError("malformed seconds in '" + text + "'");
            }
            ss = *parsed;
            pos = end;
        }
        if (hh > 23 || mm > 59) {
            throw DataError("time of day out of range in '" + text + "'");
        }
        seconds = hh * 3600.0 + mm * 60.0 + ss;
        if (pos < text.size()) {
            if (text[pos] == 'Z' && pos + 1 == text.size()) {
                pos += 1;
            } else if ((text[pos] == '+' || text[pos] == '-') && pos + 6 == text.size() && text[pos + 3] == ':') {
                const int oh = parse_fixed_int(text, pos + 1, 2);
                const int om = parse_fixed_int(text, pos + 4, 2);
                const double offset = oh * 3600.0 + om * 60.0;
                seconds += text[pos] == '+' ? -offset : offset;
                pos = text.size();
            } else {
                throw DataError("unsupported timezone suffix in '" + text + "'");
            }
        }
    }
    if (pos != text.size()) {
        throw DataError("trailing characters in timestamp '" + text + "'");
    }
    const auto days_since_epoch = sys_days{ymd}.time_since_epoch().count();
    return static_cast<double>(days_since_epoch) + seconds / 86400.0;
}

std::string format_iso8601(double epoch_days) {
    using namespace std::chrono;
    const double whole = std::floor(epoch_days);
    const sys_days day_point{days{static_cast<long>(whole)}};
    const year_month_day ymd{day_point};
    double secs = (epoch_days - whole) * 86400.0;
    long micros = std::lround(secs * 1e6);
    const int hh = static_cast<int>(micros / 3600000000L);
    micros -= hh * 3600000000L;
    const int mm = static_cast<int>(micros / 60000000L);
    micros -= mm * 60000000L;
    char buf[64];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%09.6fZ", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()), hh, mm,
                  static_cast<double>(micros) / 1e6);
    return buf;
}

Catalog make_catalog(std::vector<Event> events, double T, double m0, SpatialWindow window) {
    Catalog catalog;
    catalog.T = T;
    catalog.m0 = m0;
    catalog.window = window;
    auto& meta = catalog.meta;

    if (!std::is_sorted(events.begin(), events.end(),
                        [](const Event& a, const Event& b) { return a.t < b.t; })) {
        std::stable_sort(events.begin(), events.end(),
                         [](const Event& a, const Event& b) { return a.t < b.t; });
        meta.resorted = true;
        meta.warnings.emplace_back("input events were not time-ordered and have been sorted");
    }

    catalog.events.reserve(events.size());
    for (const Event& e : events) {
        if (!(e.m >= m0)) {
            ++meta.dropped_below_threshold;
        } else if (!window.contains(e.x, e.y)) {
            ++meta.dropped_outside_window;
        } else if (!std::isfinite(e.t) || e.t < 0.0 || e.t > T) {
            ++meta.dropped_outside_time;
        } else {
            catalog.events.push_back(e);
        }
    }

    separate_tied_times(catalog);
    if (catalog.events.empty()) {
        throw DataError("catalog is empty after filtering");
    }
    return catalog;
}

std::size_t separate_tied_times(Catalog& catalog) {
    auto& ev = catalog.events;
    std::size_t moved = 0;
    for (std::size_t i = 1; i < ev.size(); ++i) {
        if (ev[i].t <= ev[i - 1].t) {
            ev[i].t = ev[i - 1].t + kTieStep;
            ++moved;
        }
    }
    if (moved > 0) {
        catalog.meta.ties_broken += moved;
        catalog.meta.warnings.emplace_back(std::to_string(moved) +
                                           " tied event times were separated by 1e-9 day steps");
        catalog.T = std::max(catalog.T, ev.back().t);
    }
    return moved;
}

Catalog load_catalog(const std::filesystem::path& path, const LoadOptions& options) {
    std::ifstream in(path);
    if (!in) {
        throw DataError("cannot open catalog file '" + path.string() + "'");
    }
    std::string line;
    std::size_t line_no = 0;
    std::vector<std::string> header;
    while (std::getline(in, line)) {
        ++line_no;
        if (!trim(line).empty() && trim(line)[0] != '#') {
            header = split_csv_line(line);
            break;
        }
    }
    if (header.empty()) {
        throw DataError("catalog file '" + path.string() + "' has no header row");
    }
    const auto& fmt = options.format;
    const auto column = [&](const std::string& name) {
        const auto it = std::find(header.begin(), header.end(), name);
        if (it == header.end()) {
            throw DataError("catalog is missing required column '" + name + "'");
        }
        return static_cast<std::size_t>(it - header.begin());
    };
    const std::size_t ct = column(fmt.time_column);
    const std::size_t cx = column(fmt.x_column);
    const std::size_t cy = column(fmt.y_column);
    const std::size_t cm = column(fmt.magnitude_column);
    const std::size_t needed = std::max({ct, cx, cy, cm}) + 1;

    struct RawRow {
        TimeValue time;
        double x, y, m;
    };
    std::vector<RawRow> rows;
    bool any_iso = false;
    bool any_numeric = false;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string trimmed = trim(line);
        if (trimmed.empty() || trimmed[0] == '#') {
            continue;
        }
        const auto fields = split_csv_line(line);
        if (fields.size() < needed) {
            throw DataError("row " + std::to_string(line_no) + ": expected at least " +
                            std::to_string(needed) + " fields");
        }
        RawRow row{};
        try {
            row.time = parse_time_value(fields[ct]);
        } catch (const DataError& e) {
            throw DataError("row " + std::to_string(line_no) + ": " + e.what());
        }
        const auto x = parse_number(fields[cx]);
        const auto y = parse_number(fields[cy]);
        const auto m = parse_number(fields[cm]);
        if (!x || !y || !m || !std::isfinite(row.time.value)) {
            throw DataError("row " + std::to_string(line_no) + ": unparsable numeric field");
        }
        row.x = (fmt.wrap_longitude && *x < 0.0) ? *x + 360.0 : *x;
        row.y = *y;
        row.m = *m;
        (row.time.iso ? any_iso : any_numeric) = true;
        rows.push_back(row);
    }
    if (any_iso && any_numeric) {
        throw DataError("time column mixes ISO-8601 and numeric values");
    }

    std::optional<double> origin;
    if (any_iso) {
        if (options.origin) {
            origin = parse_time_value(*options.origin).value;
        } else {
            double first = std::numeric_limits<double>::infinity();
            for (const auto& r : rows) {
                first = std::min(first, r.time.value);
            }
            // Midnight of the first event's day keeps the first waiting time positive.
            origin = std::floor(first);
        }
    }

    std::vector<Event> events;
    events.reserve(rows.size());
    for (const auto& r : rows) {
        const double t = origin ? r.time.value - *origin : r.time.value;
        events.push_back({t, r.x, r.y, r.m});
    }

    double T = -std::numeric_limits<double>::infinity();
    if (options.end) {
        const TimeValue end = parse_time_value(*options.end);
        T = (end.iso && origin) ? end.value - *origin : end.value;
    } else {
        for (const Event& e : events) {
            if (e.m >= options.m0 && options.window.contains(e.x, e.y)) {
                T = std::max(T, e.t);
            }
        }
    }

    Catalog catalog = make_catalog(std::move(events), T, options.m0, options.window);
    catalog.origin_epoch_days = origin;
    return catalog;
}

void save_catalog(const Catalog& catalog, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) {
        throw DataError("cannot write catalog file '" + path.string() + "'");
    }
    out << "time,x,y,magnitude\n";
    char buf[128];
    for (const Event& e : catalog.events) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g\n", e.t, e.x, e.y, e.m);
        out << buf;
    }
    if (!out) {
        throw DataError("failed writing catalog file '" + path.string() + "'");
    }
}

ValidationReport validate(const Catalog& catalog) {
    ValidationReport report;
    constexpr std::size_t kCatalogLevel = std::numeric_limits<std::size_t>::max();
    if (catalog.events.empty()) {
        report.push_back({kCatalogLevel, "catalog has no events"});
    }
    if (!std::isfinite(catalog.T) || catalog.T < 0.0) {
        report.push_back({kCatalogLevel, "censoring time T is not a finite nonnegative number"});
    }
    const auto& w = catalog.window;
    if (w.kind == SpatialWindow::Kind::Rectangle && !(w.x_min < w.x_max && w.y_min < w.y_max)) {
        report.push_back({kCatalogLevel, "rectangle window has empty extent"});
    }
    const auto& ev = catalog.events;
    for (std::size_t i = 0; i < ev.size(); ++i) {
        const Event& e = ev[i];
        if (!std::isfinite(e.t) || e.t < 0.0) {
            report.push_back({i, "event time is negative or not finite"});
        }
        if (e.t > catalog.T) {
            report.push_back({i, "event time exceeds censoring time T"});
        }
        if (!(e.m >= catalog.m0)) {
            report.push_back({i, "magnitude below threshold m0"});
        }
        if (!w.contains(e.x, e.y)) {
            report.push_back({i, "epicentre outside spatial window"});
        }
        if (i > 0 && !(e.t > ev[i - 1].t)) {
            report.push_back({i, "event times not strictly increasing"});
        }
    }
    return report;
}

} // namespace retas
