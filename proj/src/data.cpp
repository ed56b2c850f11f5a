#include "bmd/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

namespace bmd {

void QuantalDataset::validate() const {
    const std::size_t J = doses.size();
    if (J == 0) throw DatasetError("dataset is empty");
    if (subjects.size() != J || events.size() != J)
        throw DatasetError("dose, subject, and event columns differ in length");
    for (std::size_t j = 0; j < J; ++j) {
        if (!std::isfinite(doses[j]) || doses[j] < 0)
            throw DatasetError("dose must be finite and nonnegative");
        if (j > 0 && !(doses[j] > doses[j - 1]))
            throw DatasetError("doses must be strictly increasing");
        if (subjects[j] <= 0) throw DatasetError("subject count must be positive");
        if (events[j] < 0 || events[j] > subjects[j])
            throw DatasetError("event count out of range");
    }
    long total = std::accumulate(subjects.begin(), subjects.end(), 0L);
    if (n_total != total) throw DatasetError("n_total does not match subject counts");
}

long QuantalDataset::events_total() const {
    return std::accumulate(events.begin(), events.end(), 0L);
}

namespace {

std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

}  // namespace

QuantalDataset load_dataset(std::istream& in) {
    QuantalDataset out;
    struct Row { double dose; long n, y; };
    std::vector<Row> rows;
    std::string line;
    bool header_seen = false;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        if (!header_seen) {
            std::string squashed;
            for (char c : t)
                if (!std::isspace(static_cast<unsigned char>(c))) squashed += std::tolower(c);
            if (squashed != "dose,n,y")
                throw DatasetError("expected header 'dose,n,y', got '" + t + "'");
            header_seen = true;
            continue;
        }
        std::replace(t.begin(), t.end(), ',', ' ');
        std::istringstream fields(t);
        Row r{};
        if (!(fields >> r.dose >> r.n >> r.y))
            throw DatasetError("malformed row at line " + std::to_string(lineno));
        std::string extra;
        if (fields >> extra)
            throw DatasetError("trailing fields at line " + std::to_string(lineno));
        rows.push_back(r);
    }
    if (!header_seen) throw DatasetError("missing header 'dose,n,y'");
    if (rows.empty()) throw DatasetError("no data rows");
    std::sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) { return a.dose < b.dose; });
    for (std::size_t j = 1; j < rows.size(); ++j)
        if (rows[j].dose == rows[j - 1].dose)
            throw DatasetError("duplicate dose " + std::to_string(rows[j].dose));
    for (const Row& r : rows) {
        out.doses.push_back(r.dose);
        out.subjects.push_back(r.n);
        out.events.push_back(r.y);
        out.n_total += r.n;
    }
    if (out.doses.front() != 0.0)
        out.warnings.push_back("no zero-dose control group");
    out.validate();
    return out;
}

QuantalDataset load_dataset(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DatasetError("cannot open " + path);
    return load_dataset(in);
}

QuantalDataset standardize_doses(const QuantalDataset& data) {
    data.validate();
    double dmax = data.doses.back();
    if (dmax == 1.0 || dmax == 0.0) return data;
    QuantalDataset out = data;
    for (double& d : out.doses) d /= dmax;
    out.doses.back() = 1.0;            // exact despite rounding
    out.dose_scale = data.dose_scale * dmax;
    return out;
}

std::string serialize(const QuantalDataset& data) {
    std::ostringstream os;
    os.precision(17);
    os << "dose,n,y\n";
    for (std::size_t j = 0; j < data.size(); ++j)
        os << data.doses[j] << "," << data.subjects[j] << "," << data.events[j] << "\n";
    return os.str();
}

}  // namespace bmd
