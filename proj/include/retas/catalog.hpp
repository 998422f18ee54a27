#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace retas {

struct Event {
    double t = 0.0; ///< days since catalog origin
    double x = 0.0;
    double y = 0.0;
    double m = 0.0;
};

struct SpatialWindow {
    enum class Kind { WholePlane, Rectangle };

    Kind kind = Kind::WholePlane;
    double x_min = 0.0;
    double x_max = 0.0;
    double y_min = 0.0;
    double y_max = 0.0;

    static SpatialWindow whole_plane() { return {}; }
    /// Throws std::invalid_argument unless x_min < x_max and y_min < y_max.
    static SpatialWindow rectangle(double x_min, double x_max, double y_min, double y_max);

    [[nodiscard]] bool contains(double x, double y) const;
    [[nodiscard]] bool is_whole_plane() const { return kind == Kind::WholePlane; }
};

/// Bookkeeping from ingestion: what was dropped or altered on the way in.
struct CatalogMetadata {
    std::size_t dropped_below_threshold = 0;
    std::size_t dropped_outside_window = 0;
    std::size_t dropped_outside_time = 0;
    std::size_t ties_broken = 0;
    bool resorted = false;
    std::vector<std::string> warnings;

    [[nodiscard]] std::size_t dropped_count() const {
        return dropped_below_threshold + dropped_outside_window + dropped_outside_time;
    }
};

/// An earthquake catalog. Treated as immutable once built; share by const reference.
struct Catalog {
    std::vector<Event> events;
    double T = 0.0;  ///< censoring time (days)
    double m0 = 0.0; ///< threshold magnitude
    SpatialWindow window;
    /// Calendar origin as days since 1970-01-01T00:00:00Z, when times came from ISO-8601.
    std::optional<double> origin_epoch_days;
    CatalogMetadata meta;

    [[nodiscard]] std::size_t size() const { return events.size(); }
    [[nodiscard]] bool empty() const { return events.empty(); }
    const Event& operator[](std::size_t i) const { return events[i]; }
};

/// Column mapping from logical field to CSV header name.
struct CatalogFormat {
    std::string time_column = "time";
    std::string x_column = "x";
    std::string y_column = "y";
    std::string magnitude_column = "magnitude";
    /// Map negative longitudes to [180, 360) so windows crossing the antimeridian work.
    bool wrap_longitude = false;

    /// Parses "time=origintime,x=longitude,..." style remaps. Unknown logical names throw.
    static CatalogFormat from_column_map(const std::string& spec);
};

struct LoadOptions {
    CatalogFormat format;
    double m0 = 0.0;
    SpatialWindow window;
    /// ISO-8601 timestamp or plain number of days; only used for ISO time columns.
    std::optional<std::string> origin;
    /// Censoring time as ISO-8601 or days; defaults to the last retained event time.
    std::optional<std::string> end;
};

struct ValidationIssue {
    std::size_t index = 0; ///< offending event index (0-based); catalog-level issues use SIZE_MAX
    std::string message;
};

using ValidationReport = std::vector<ValidationIssue>;

/// Sorts, breaks ties and filters raw events into a catalog. Events below m0, outside the
/// window, or outside [0, T] are dropped and counted. Throws DataError if nothing survives.
Catalog make_catalog(std::vector<Event> events, double T, double m0, SpatialWindow window);

/// Moves every event whose time does not exceed its predecessor's to 1e-9 days after it,
/// extending T if needed. Events must already be sorted. Returns the number moved.
std::size_t separate_tied_times(Catalog& catalog);

/// Reads a CSV catalog. Throws DataError on unreadable files, unparsable rows (with row
/// number) or an empty result after filtering.
Catalog load_catalog(const std::filesystem::path& path, const LoadOptions& options);

/// Writes `time,x,y,magnitude` with 17 significant digits.
void save_catalog(const Catalog& catalog, const std::filesystem::path& path);

/// Lists violated invariants; never throws and never mutates.
ValidationReport validate(const Catalog& catalog);

/// Days since the Unix epoch for an ISO-8601 date or datetime ("Z" suffix optional).
/// Throws DataError on malformed input.
double parse_iso8601_days(const std::string& text);

/// Inverse of parse_iso8601_days, rendered as YYYY-MM-DDTHH:MM:SS.ssssssZ.
std::string format_iso8601(double epoch_days);

} // namespace retas
