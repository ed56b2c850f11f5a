#pragma once

#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

namespace bmd {

struct DatasetError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Grouped binomial dose-response data. Doses strictly increasing,
// 0 <= events[j] <= subjects[j], subjects[j] > 0.
struct QuantalDataset {
    std::vector<double> doses;
    std::vector<long> subjects;
    std::vector<long> events;
    long n_total = 0;                 // sum of subjects
    double dose_scale = 1.0;          // original dose = stored dose * dose_scale
    std::vector<std::string> warnings;

    std::size_t size() const { return doses.size(); }
    void validate() const;            // throws DatasetError on invariant violation
    long events_total() const;
};

// CSV with header "dose,n,y"; lines starting with '#' and blank lines skipped.
// Rows need not be sorted; they are sorted by dose on load. Duplicate doses are
// an error. A missing zero dose is recorded as a warning, not an error.
QuantalDataset load_dataset(std::istream& in);
QuantalDataset load_dataset(const std::string& path);

// Rescale doses so the largest becomes 1; dose_scale records the factor.
// A dataset whose largest dose is already 1 is returned unchanged.
QuantalDataset standardize_doses(const QuantalDataset& data);

// CSV round-trip companion of load_dataset (doses written at full precision).
std::string serialize(const QuantalDataset& data);

}  // namespace bmd
