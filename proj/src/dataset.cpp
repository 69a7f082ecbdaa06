#include "spatec/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

namespace spatec {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Splits one CSV line; supports quoted fields with "" escapes.
std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cur += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    fields.push_back(cur);
    return fields;
}

std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t");
    auto e = s.find_last_not_of(" \t");
    if (b == std::string::npos) return "";
    return s.substr(b, e - b + 1);
}

double parse_double(const std::string& token, std::size_t row, const std::string& column) {
    std::string t = trim(token);
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), value);
    if (ec != std::errc() || ptr != t.data() + t.size())
        throw ParseError("row " + std::to_string(row) + ", column '" + column +
                         "': cannot parse '" + token + "' as a number");
    return value;
}

long parse_long(const std::string& token, std::size_t row, const std::string& column) {
    double v = parse_double(token, row, column);
    if (std::fabs(v - std::llround(v)) > 1e-9)
        throw ParseError("row " + std::to_string(row) + ", column '" + column +
                         "': expected an integer, got '" + token + "'");
    return static_cast<long>(std::llround(v));
}

std::string format_full(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

const char* to_string(HomeStyle s) {
    switch (s) {
        case HomeStyle::single_family: return "single_family";
        case HomeStyle::condo: return "condo";
        case HomeStyle::townhomes: return "townhomes";
        case HomeStyle::duplex_triplex: return "duplex_triplex";
    }
    return "single_family";
}

std::optional<HomeStyle> style_from_string(std::string_view s) {
    if (s == "single_family") return HomeStyle::single_family;
    if (s == "condo") return HomeStyle::condo;
    if (s == "townhomes") return HomeStyle::townhomes;
    if (s == "duplex_triplex") return HomeStyle::duplex_triplex;
    return std::nullopt;
}

std::optional<std::string> validate_record(const PropertyRecord& rec) {
    if (!(rec.price > 0.0)) return "price must be positive";
    if (!(rec.sqft > 0.0)) return "sqft must be positive";
    if (rec.sale_month < 1 || rec.sale_month > 12) return "sale_month must lie in 1..12";
    if (rec.latitude < -90.0 || rec.latitude > 90.0) return "latitude outside [-90, 90]";
    if (rec.longitude < -180.0 || rec.longitude > 180.0) return "longitude outside [-180, 180]";
    if (rec.address.empty()) return "address is empty";
    if (!std::isfinite(rec.price) || !std::isfinite(rec.sqft) || !std::isfinite(rec.lot_sqft) ||
        !std::isfinite(rec.latitude) || !std::isfinite(rec.longitude))
        return "non-finite numeric field";
    return std::nullopt;
}

PropertyDataset::PropertyDataset(std::vector<PropertyRecord> records)
    : records_(std::move(records)) {
    const std::size_t n = records_.size();
    auto add = [&](const std::string& name, auto getter) {
        std::vector<double> col(n);
        for (std::size_t i = 0; i < n; ++i) col[i] = getter(records_[i]);
        set_column(name, std::move(col));
    };
    add("house_id", [](const PropertyRecord& r) { return static_cast<double>(r.house_id); });
    add("price", [](const PropertyRecord& r) { return r.price; });
    add("sqft", [](const PropertyRecord& r) { return r.sqft; });
    add("lot_sqft", [](const PropertyRecord& r) { return r.lot_sqft; });
    add("beds", [](const PropertyRecord& r) { return r.beds; });
    add("baths", [](const PropertyRecord& r) { return r.baths; });
    add("stories", [](const PropertyRecord& r) { return r.stories; });
    add("parking", [](const PropertyRecord& r) { return r.parking; });
    add("zipcode", [](const PropertyRecord& r) { return static_cast<double>(r.zipcode); });
    add("year_built", [](const PropertyRecord& r) { return static_cast<double>(r.year_built); });
    add("latitude", [](const PropertyRecord& r) { return r.latitude; });
    add("longitude", [](const PropertyRecord& r) { return r.longitude; });
    add("sale_year", [](const PropertyRecord& r) { return static_cast<double>(r.sale_year); });
    add("sale_month", [](const PropertyRecord& r) { return static_cast<double>(r.sale_month); });
    add("single_family",
        [](const PropertyRecord& r) { return r.style == HomeStyle::single_family ? 1.0 : 0.0; });
    add("condo", [](const PropertyRecord& r) { return r.style == HomeStyle::condo ? 1.0 : 0.0; });
    add("townhomes",
        [](const PropertyRecord& r) { return r.style == HomeStyle::townhomes ? 1.0 : 0.0; });
    add("duplex_triplex",
        [](const PropertyRecord& r) { return r.style == HomeStyle::duplex_triplex ? 1.0 : 0.0; });
}

bool PropertyDataset::has_column(const std::string& name) const {
    return index_.count(name) > 0;
}

const std::vector<double>& PropertyDataset::column(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw ColumnError("unknown column '" + name + "'");
    return columns_[it->second];
}

void PropertyDataset::set_column(const std::string& name, std::vector<double> values) {
    if (values.size() != records_.size())
        throw ColumnError("column '" + name + "' has length " + std::to_string(values.size()) +
                          ", dataset has " + std::to_string(records_.size()) + " rows");
    auto it = index_.find(name);
    if (it != index_.end()) {
        columns_[it->second] = std::move(values);
    } else {
        index_[name] = columns_.size();
        names_.push_back(name);
        columns_.push_back(std::move(values));
    }
}

Eigen::VectorXd PropertyDataset::column_vector(const std::string& name) const {
    const auto& c = column(name);
    return Eigen::Map<const Eigen::VectorXd>(c.data(), static_cast<Eigen::Index>(c.size()));
}

LoadResult load_csv(const std::string& path, const ColumnMap& schema) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open '" + path + "'");

    std::string header_line;
    if (!std::getline(in, header_line)) throw ParseError("'" + path + "' is empty");
    auto header = split_csv_line(header_line);
    std::map<std::string, std::size_t> header_index;
    for (std::size_t i = 0; i < header.size(); ++i) header_index[trim(header[i])] = i;

    auto csv_name = [&](const std::string& canonical) {
        auto it = schema.find(canonical);
        return it == schema.end() ? canonical : it->second;
    };
    auto find_col = [&](const std::string& canonical, bool required) -> long {
        auto it = header_index.find(csv_name(canonical));
        if (it == header_index.end()) {
            if (required)
                throw ParseError("missing required column '" + csv_name(canonical) + "' in '" +
                                 path + "'");
            return -1;
        }
        return static_cast<long>(it->second);
    };

    const std::vector<std::string> required = {
        "address", "price",   "sqft",     "lot_sqft",   "beds",
        "baths",   "stories", "parking",  "style",      "zipcode",
        "year_built", "latitude", "longitude", "sale_year", "sale_month"};
    std::map<std::string, long> idx;
    for (const auto& name : required) idx[name] = find_col(name, true);
    idx["house_id"] = find_col("house_id", false);
    idx["dist_pch"] = find_col("dist_pch", false);

    struct ParsedRow {
        PropertyRecord rec;
        double dist_pch = kNaN;
        std::size_t row = 0;
    };
    LoadResult result;
    std::vector<ParsedRow> parsed;
    std::string line;
    std::size_t row = 0;
    bool any_data_rows = false;
    while (std::getline(in, line)) {
        ++row;
        if (trim(line).empty()) continue;
        any_data_rows = true;
        auto fields = split_csv_line(line);
        auto get = [&](const std::string& name) -> std::string {
            long j = idx[name];
            if (j < 0 || static_cast<std::size_t>(j) >= fields.size()) return "";
            return fields[static_cast<std::size_t>(j)];
        };
        ParsedRow pr;
        pr.row = row;
        pr.rec.address = trim(get("address"));
        pr.rec.price = parse_double(get("price"), row, csv_name("price"));
        pr.rec.sqft = parse_double(get("sqft"), row, csv_name("sqft"));
        pr.rec.lot_sqft = parse_double(get("lot_sqft"), row, csv_name("lot_sqft"));
        pr.rec.beds = parse_double(get("beds"), row, csv_name("beds"));
        pr.rec.baths = parse_double(get("baths"), row, csv_name("baths"));
        pr.rec.stories = parse_double(get("stories"), row, csv_name("stories"));
        pr.rec.parking = parse_double(get("parking"), row, csv_name("parking"));
        pr.rec.zipcode = parse_long(get("zipcode"), row, csv_name("zipcode"));
        pr.rec.year_built = parse_long(get("year_built"), row, csv_name("year_built"));
        pr.rec.latitude = parse_double(get("latitude"), row, csv_name("latitude"));
        pr.rec.longitude = parse_double(get("longitude"), row, csv_name("longitude"));
        pr.rec.sale_year = static_cast<int>(parse_long(get("sale_year"), row, csv_name("sale_year")));
        pr.rec.sale_month =
            static_cast<int>(parse_long(get("sale_month"), row, csv_name("sale_month")));
        if (idx["house_id"] >= 0)
            pr.rec.house_id = parse_long(get("house_id"), row, csv_name("house_id"));
        if (idx["dist_pch"] >= 0) {
            std::string t = trim(get("dist_pch"));
            pr.dist_pch = t.empty() ? kNaN : parse_double(t, row, csv_name("dist_pch"));
        }
        std::string style_token = trim(get("style"));
        auto style = style_from_string(style_token);
        if (!style) {
            result.rejected.push_back({row, "style", "unknown style '" + style_token + "'"});
            continue;
        }
        pr.rec.style = *style;
        parsed.push_back(std::move(pr));
    }
    if (!any_data_rows) throw ParseError("'" + path + "' contains a header but no data rows");

    std::set<std::string> seen_addresses;
    std::vector<ParsedRow> kept;
    for (auto& pr : parsed) {
        if (!pr.rec.address.empty() && seen_addresses.count(pr.rec.address)) {
            ++result.duplicates_dropped;
            continue;
        }
        if (auto issue = validate_record(pr.rec)) {
            result.rejected.push_back({pr.row, "", *issue});
            continue;
        }
        seen_addresses.insert(pr.rec.address);
        kept.push_back(std::move(pr));
    }

    // house_id: honor an explicit column, otherwise rank addresses the way
    // group(address) does after sorting.
    bool have_ids = idx["house_id"] >= 0;
    if (have_ids) {
        std::set<long> seen_ids;
        std::vector<ParsedRow> unique_rows;
        for (auto& pr : kept) {
            if (pr.rec.house_id <= 0) {
                result.rejected.push_back({pr.row, "house_id", "house_id must be positive"});
                continue;
            }
            if (!seen_ids.insert(pr.rec.house_id).second) {
                result.rejected.push_back({pr.row, "house_id", "duplicate house_id"});
                continue;
            }
            unique_rows.push_back(std::move(pr));
        }
        kept = std::move(unique_rows);
    } else {
        std::vector<std::string> addresses;
        addresses.reserve(kept.size());
        for (const auto& pr : kept) addresses.push_back(pr.rec.address);
        std::sort(addresses.begin(), addresses.end());
        std::map<std::string, long> rank;
        long next = 1;
        for (const auto& a : addresses)
            if (!rank.count(a)) rank[a] = next++;
        for (auto& pr : kept) pr.rec.house_id = rank[pr.rec.address];
    }

    std::vector<PropertyRecord> records;
    std::vector<double> dist;
    bool any_dist = false;
    records.reserve(kept.size());
    for (auto& pr : kept) {
        records.push_back(std::move(pr.rec));
        dist.push_back(pr.dist_pch);
        if (std::isfinite(pr.dist_pch)) any_dist = true;
    }
    result.dataset = PropertyDataset(std::move(records));
    if (any_dist) result.dataset.set_column("dist_pch", std::move(dist));
    return result;
}

void write_csv(const PropertyDataset& ds, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ParseError("cannot write '" + path + "'");
    const auto& names = ds.column_names();
    out << "address,style";
    for (const auto& n : names) out << ',' << n;
    out << '\n';
    for (std::size_t i = 0; i < ds.n_rows(); ++i) {
        const auto& rec = ds.records()[i];
        std::string addr = rec.address;
        bool need_quotes = addr.find_first_of(",\"") != std::string::npos;
        if (need_quotes) {
            std::string q = "\"";
            for (char c : addr) {
                if (c == '"') q += "\"\"";
                else q += c;
            }
            q += "\"";
            addr = q;
        }
        out << addr << ',' << to_string(rec.style);
        for (const auto& n : names) out << ',' << format_full(ds.column(n)[i]);
        out << '\n';
    }
}

PropertyDataset derive_columns(const PropertyDataset& ds, double price_threshold) {
    PropertyDataset out = ds;
    const std::size_t n = ds.n_rows();

    auto safe_log = [&](const std::vector<double>& src, const std::string& name) {
        std::vector<double> r(n);
        for (std::size_t i = 0; i < n; ++i) {
            if (std::isnan(src[i])) {
                r[i] = kNaN;
                continue;
            }
            if (src[i] <= 0.0)
                throw DomainError("ln(" + name + ") undefined at row " + std::to_string(i + 1) +
                                  ": value " + std::to_string(src[i]));
            r[i] = std::log(src[i]);
        }
        return r;
    };

    out.set_column("lnprice", safe_log(ds.column("price"), "price"));
    out.set_column("lnsqft", safe_log(ds.column("sqft"), "sqft"));
    if (!ds.has_column("dist_pch"))
        throw ColumnError("derive_columns requires a 'dist_pch' column; compute distances first");
    out.set_column("lndist_pch", safe_log(ds.column("dist_pch"), "dist_pch"));

    std::vector<double> time_col(n), hby(n), pdummy(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto& rec = ds.records()[i];
        time_col[i] = static_cast<double>(month_index(rec.sale_year, rec.sale_month));
        hby[i] = static_cast<double>(rec.house_id) * static_cast<double>(rec.sale_year);
        pdummy[i] = rec.price >= price_threshold ? 1.0 : 0.0;
    }
    out.set_column("time", std::move(time_col));
    out.set_column("house_by_year", std::move(hby));
    out.set_column("pricedummy", std::move(pdummy));

    static const char* kMonthNames[12] = {"jan", "feb", "mar", "apr", "may", "jun",
                                          "jul", "aug", "sep", "oct", "nov", "dec"};
    for (int m = 1; m <= 12; ++m) {
        std::vector<double> col(n);
        for (std::size_t i = 0; i < n; ++i) col[i] = ds.records()[i].sale_month == m ? 1.0 : 0.0;
        out.set_column(kMonthNames[m - 1], std::move(col));
    }
    std::set<int> years;
    for (const auto& rec : ds.records()) years.insert(rec.sale_year);
    for (int y : years) {
        std::vector<double> col(n);
        for (std::size_t i = 0; i < n; ++i) col[i] = ds.records()[i].sale_year == y ? 1.0 : 0.0;
        out.set_column("yr" + std::to_string(y), std::move(col));
    }
    return out;
}

std::vector<double> standardize(const std::vector<double>& column) {
    if (column.size() < 2) throw DomainError("standardize: need at least 2 values");
    double mean = 0.0;
    for (double v : column) mean += v;
    mean /= static_cast<double>(column.size());
    double ss = 0.0;
    for (double v : column) ss += (v - mean) * (v - mean);
    double sd = std::sqrt(ss / static_cast<double>(column.size() - 1));
    if (sd == 0.0) throw DomainError("standardize: column has zero variance");
    std::vector<double> out(column.size());
    for (std::size_t i = 0; i < column.size(); ++i) out[i] = (column[i] - mean) / sd;
    return out;
}

DescriptiveStats describe(const PropertyDataset& ds, const std::vector<std::string>& columns) {
    DescriptiveStats stats;
    for (const auto& name : columns) {
        const auto& col = ds.column(name);
        DescriptiveStats::Column c;
        c.name = name;
        double sum = 0.0;
        double mn = std::numeric_limits<double>::infinity();
        double mx = -std::numeric_limits<double>::infinity();
        for (double v : col) {
            if (std::isnan(v)) continue;
            ++c.n;
            sum += v;
            mn = std::min(mn, v);
            mx = std::max(mx, v);
        }
        if (c.n == 0) {
            c.mean = c.sd = c.min = c.max = kNaN;
            stats.columns.push_back(c);
            continue;
        }
        c.mean = sum / static_cast<double>(c.n);
        double ss = 0.0;
        for (double v : col) {
            if (std::isnan(v)) continue;
            ss += (v - c.mean) * (v - c.mean);
        }
        c.sd = c.n > 1 ? std::sqrt(ss / static_cast<double>(c.n - 1)) : 0.0;
        c.min = mn;
        c.max = mx;
        stats.columns.push_back(c);
    }
    return stats;
}

Eigen::MatrixXd correlation_matrix(const PropertyDataset& ds,
                                   const std::vector<std::string>& columns) {
    const std::size_t k = columns.size();
    std::vector<const std::vector<double>*> cols;
    cols.reserve(k);
    for (const auto& name : columns) cols.push_back(&ds.column(name));

    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < ds.n_rows(); ++i) {
        bool ok = true;
        for (const auto* c : cols)
            if (std::isnan((*c)[i])) {
                ok = false;
                break;
            }
        if (ok) rows.push_back(i);
    }
    if (rows.size() < 2) throw DomainError("correlation_matrix: fewer than 2 complete rows");

    Eigen::MatrixXd data(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(k));
    for (std::size_t j = 0; j < k; ++j)
        for (std::size_t i = 0; i < rows.size(); ++i)
            data(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = (*cols[j])[rows[i]];

    Eigen::RowVectorXd mean = data.colwise().mean();
    data.rowwise() -= mean;
    Eigen::VectorXd sd(k);
    for (std::size_t j = 0; j < k; ++j) {
        sd(static_cast<Eigen::Index>(j)) = data.col(static_cast<Eigen::Index>(j)).norm();
        if (sd(static_cast<Eigen::Index>(j)) == 0.0)
            throw DomainError("correlation_matrix: column '" + columns[j] + "' has zero variance");
    }
    Eigen::MatrixXd corr(k, k);
    for (std::size_t a = 0; a < k; ++a) {
        corr(a, a) = 1.0;
        for (std::size_t b = a + 1; b < k; ++b) {
            double r = data.col(static_cast<Eigen::Index>(a))
                           .dot(data.col(static_cast<Eigen::Index>(b))) /
                       (sd(static_cast<Eigen::Index>(a)) * sd(static_cast<Eigen::Index>(b)));
            r = std::clamp(r, -1.0, 1.0);
            corr(a, b) = corr(b, a) = r;
        }
    }
    return corr;
}

long month_index(int year, int month) { return 12L * (year - 1960) + (month - 1); }

std::vector<std::string> expand_regressors(const PropertyDataset& ds,
                                           const std::vector<std::string>& tokens) {
    std::vector<std::string> out;
    static const char* kMonthNames[12] = {"jan", "feb", "mar", "apr", "may", "jun",
                                          "jul", "aug", "sep", "oct", "nov", "dec"};
    for (const auto& tok : tokens) {
        if (tok.rfind("i.", 0) != 0) {
            out.push_back(tok);
            continue;
        }
        std::string col = tok.substr(2);
        std::set<long> values;
        if (col == "month") {
            for (const auto& rec : ds.records()) values.insert(rec.sale_month);
            bool first = true;
            for (long m : values) {
                if (first) {
                    first = false;  // base level: lowest observed category
                    continue;
                }
                out.push_back(kMonthNames[m - 1]);
            }
        } else if (col == "year") {
            for (const auto& rec : ds.records()) values.insert(rec.sale_year);
            bool first = true;
            for (long y : values) {
                if (first) {
                    first = false;
                    continue;
                }
                out.push_back("yr" + std::to_string(y));
            }
        } else {
            for (double v : ds.column(col)) {
                if (std::isnan(v)) continue;
                values.insert(std::lround(v));
            }
            bool first = true;
            for (long v : values) {
                if (first) {
                    first = false;
                    continue;
                }
                std::string name = col + "_" + std::to_string(v);
                if (!ds.has_column(name))
                    throw ColumnError("dummy column '" + name +
                                      "' not found; materialize dummies for '" + col + "' first");
                out.push_back(name);
            }
        }
    }
    return out;
}

PropertyDataset subset_rows(const PropertyDataset& ds, const std::vector<std::size_t>& rows) {
    std::vector<PropertyRecord> recs;
    recs.reserve(rows.size());
    for (std::size_t r : rows) {
        if (r >= ds.n_rows())
            throw DomainError("subset row " + std::to_string(r) + " out of range");
        recs.push_back(ds.records()[r]);
    }
    PropertyDataset sub(std::move(recs));
    // copy every column so replacements and derived columns survive the slice
    for (const auto& name : ds.column_names()) {
        const auto& full = ds.column(name);
        std::vector<double> vals;
        vals.reserve(rows.size());
        for (std::size_t r : rows) vals.push_back(full[r]);
        sub.set_column(name, std::move(vals));
    }
    return sub;
}

}  // namespace spatec
