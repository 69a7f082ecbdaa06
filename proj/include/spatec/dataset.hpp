#ifndef SPATEC_DATASET_HPP
#define SPATEC_DATASET_HPP

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "spatec/error.hpp"

namespace spatec {

enum class HomeStyle { single_family, condo, townhomes, duplex_triplex };

const char* to_string(HomeStyle s);
std::optional<HomeStyle> style_from_string(std::string_view s);

// One sold-home record. Numeric fields stay double so half baths and
// fractional areas are representable.
struct PropertyRecord {
    long house_id = 0;
    double price = 0.0;
    double sqft = 0.0;
    double lot_sqft = 0.0;
    double beds = 0.0;
    double baths = 0.0;
    double stories = 0.0;
    double parking = 0.0;
    HomeStyle style = HomeStyle::single_family;
    long zipcode = 0;
    long year_built = 0;
    double latitude = 0.0;
    double longitude = 0.0;
    int sale_year = 0;
    int sale_month = 0;
    std::string address;
};

// Validation check used at load time; returns a message for the first
// violated invariant, or nothing when the record is acceptable.
std::optional<std::string> validate_record(const PropertyRecord& rec);

struct DescriptiveStats {
    struct Column {
        std::string name;
        std::size_t n = 0;
        double mean = 0.0, sd = 0.0, min = 0.0, max = 0.0;
    };
    std::vector<Column> columns;
};

// Immutable columnar view over the records plus named derived columns.
// Missing values are quiet NaN; fits apply listwise deletion.
class PropertyDataset {
public:
    PropertyDataset() = default;
    explicit PropertyDataset(std::vector<PropertyRecord> records);

    std::size_t n_rows() const { return records_.size(); }
    const std::vector<PropertyRecord>& records() const { return records_; }

    bool has_column(const std::string& name) const;
    const std::vector<double>& column(const std::string& name) const;
    const std::vector<std::string>& column_names() const { return names_; }

    // Adds or replaces a column; the length must match n_rows().
    void set_column(const std::string& name, std::vector<double> values);

    Eigen::VectorXd column_vector(const std::string& name) const;

private:
    std::vector<PropertyRecord> records_;
    std::vector<std::string> names_;
    std::vector<std::vector<double>> columns_;
    std::map<std::string, std::size_t> index_;
};

struct RowIssue {
    std::size_t row = 0;  // 1-based data row (header excluded)
    std::string column;
    std::string message;
};

struct LoadResult {
    PropertyDataset dataset;
    std::vector<RowIssue> rejected;
    std::size_t duplicates_dropped = 0;
};

// canonical field name -> CSV header name; identity where absent.
using ColumnMap = std::map<std::string, std::string>;

// Loads and validates a property CSV. Duplicate addresses keep the first
// occurrence; invalid rows are returned in `rejected` with their row numbers.
// Throws ParseError for malformed tokens, missing header columns and
// header-only files.
LoadResult load_csv(const std::string& path, const ColumnMap& schema = {});

// Writes base columns (and any derived ones) at full precision so a
// write-then-load round trip is bit exact.
void write_csv(const PropertyDataset& ds, const std::string& path);

// Adds lnprice, lnsqft, lndist_pch, month/year dummies, time, house_by_year
// and pricedummy = (price >= threshold). dist_pch must already be present.
PropertyDataset derive_columns(const PropertyDataset& ds, double price_threshold);

// (x - mean) / sd with the sample (n-1) standard deviation.
std::vector<double> standardize(const std::vector<double>& column);

// n/mean/sd/min/max per column; NaN entries are excluded from each column.
DescriptiveStats describe(const PropertyDataset& ds, const std::vector<std::string>& columns);

// Pearson correlations over listwise-complete rows; diagonal exactly 1.
Eigen::MatrixXd correlation_matrix(const PropertyDataset& ds,
                                   const std::vector<std::string>& columns);

// Month index with 1960m1 = 0: 12*(year-1960) + month-1.
long month_index(int year, int month);

// Expands "i.month" / "i.year" / "i.<col>" regressor tokens into the dummy
// columns present in the dataset, dropping the base (lowest) category.
std::vector<std::string> expand_regressors(const PropertyDataset& ds,
                                           const std::vector<std::string>& tokens);

// New dataset holding the given rows (0-based, in order); every derived
// column is sliced along with the records.
PropertyDataset subset_rows(const PropertyDataset& ds, const std::vector<std::size_t>& rows);

}  // namespace spatec

#endif
