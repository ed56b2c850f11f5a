#include <doctest.h>

#include "bmd/data.hpp"

#include <cmath>
#include <sstream>

using namespace bmd;

namespace {

// inhalation study layout as printed in the source report (417 subjects)
const char* kStudyCsv =
    "# bis(chloromethyl)ether inhalation study\n"
    "dose,n,y\n"
    "0,240,0\n"
    "10,41,1\n"
    "20,46,3\n"
    "40,18,4\n"
    "60,18,4\n"
    "80,34,15\n"
    "100,20,12\n";

QuantalDataset load_str(const std::string& s) {
    std::istringstream in(s);
    return load_dataset(in);
}

}  // namespace

TEST_CASE("loader parses a commented csv with header") {
    QuantalDataset d = load_str(kStudyCsv);
    REQUIRE(d.size() == 7);
    CHECK(d.doses.front() == 0.0);
    CHECK(d.doses.back() == 100.0);
    CHECK(d.n_total == 417);
    CHECK(d.events_total() == 39);
    CHECK(d.subjects[2] == 46);
    CHECK(d.events[2] == 3);
    CHECK(double(d.events[2]) / double(d.subjects[2]) == doctest::Approx(3.0 / 46.0));
    CHECK(d.dose_scale == 1.0);
    CHECK(d.warnings.empty());
}

TEST_CASE("loader sorts rows by dose") {
    QuantalDataset d = load_str("dose,n,y\n1,10,2\n0,20,1\n0.5,15,3\n");
    REQUIRE(d.size() == 3);
    CHECK(d.doses[0] == 0.0);
    CHECK(d.doses[1] == 0.5);
    CHECK(d.doses[2] == 1.0);
    CHECK(d.subjects[0] == 20);
    CHECK(d.events[2] == 2);
}

TEST_CASE("loader skips blank lines and comments anywhere") {
    QuantalDataset d = load_str("\n# top\ndose,n,y\n\n0,5,0\n# mid\n1,5,1\n\n");
    CHECK(d.size() == 2);
    CHECK(d.n_total == 10);
}

TEST_CASE("loader accepts whitespace around fields and header case") {
    QuantalDataset d = load_str("Dose, N, Y\n 0 , 5 , 0 \n 1 , 5 , 2 \n");
    CHECK(d.size() == 2);
    CHECK(d.events[1] == 2);
}

TEST_CASE("loader rejects malformed input") {
    CHECK_THROWS_AS(load_str(""), DatasetError);
    CHECK_THROWS_AS(load_str("dose,n,y\n"), DatasetError);
    CHECK_THROWS_AS(load_str("a,b,c\n0,5,0\n"), DatasetError);
    CHECK_THROWS_AS(load_str("dose,n,y\n0,5\n"), DatasetError);
    CHECK_THROWS_AS(load_str("dose,n,y\n0,5,0,9\n"), DatasetError);
    CHECK_THROWS_AS(load_str("dose,n,y\nzero,5,0\n"), DatasetError);
    CHECK_THROWS_AS(load_str("dose,n,y\n0,5,0\n0,6,1\n"), DatasetError);   // duplicate dose
    CHECK_THROWS_AS(load_str("dose,n,y\n-1,5,0\n"), DatasetError);
    CHECK_THROWS_AS(load_str("dose,n,y\n0,0,0\n"), DatasetError);
    CHECK_THROWS_AS(load_str("dose,n,y\n0,5,6\n"), DatasetError);          // y > n
    CHECK_THROWS_AS(load_str("dose,n,y\n0,5,-1\n"), DatasetError);
    CHECK_THROWS_AS(load_dataset(std::string("data/does_not_exist.csv")), DatasetError);
}

TEST_CASE("missing zero dose is a warning, not an error") {
    QuantalDataset d = load_str("dose,n,y\n1,5,0\n2,5,1\n");
    REQUIRE(d.warnings.size() == 1);
    CHECK(d.warnings[0].find("zero-dose") != std::string::npos);
}

TEST_CASE("validate reports inconsistent totals") {
    QuantalDataset d = load_str("dose,n,y\n0,5,0\n1,5,1\n");
    d.n_total = 11;
    CHECK_THROWS_AS(d.validate(), DatasetError);
    d.n_total = 10;
    CHECK_NOTHROW(d.validate());
    d.events[0] = 6;
    CHECK_THROWS_AS(d.validate(), DatasetError);
}

TEST_CASE("serialize round-trips through the loader") {
    QuantalDataset d = load_str("dose,n,y\n0,240,0\n0.12345678901234567,41,1\n100,20,12\n");
    QuantalDataset r = load_str(serialize(d));
    REQUIRE(r.size() == d.size());
    for (std::size_t j = 0; j < d.size(); ++j) {
        CHECK(r.doses[j] == d.doses[j]);        // full-precision doses survive
        CHECK(r.subjects[j] == d.subjects[j]);
        CHECK(r.events[j] == d.events[j]);
    }
}

TEST_CASE("standardize rescales the largest dose to exactly one") {
    QuantalDataset d = load_str(kStudyCsv);
    QuantalDataset s = standardize_doses(d);
    CHECK(s.dose_scale == 100.0);
    CHECK(s.doses.back() == 1.0);
    CHECK(s.doses[1] == doctest::Approx(0.1));
    CHECK(s.doses[3] == doctest::Approx(0.4));
    CHECK(s.n_total == d.n_total);

    // already standardized data passes through unchanged
    QuantalDataset again = standardize_doses(s);
    CHECK(again.dose_scale == 100.0);
    CHECK(again.doses == s.doses);

    // odd maxima still land exactly on 1
    QuantalDataset odd = load_str("dose,n,y\n0,5,0\n0.3,5,1\n0.7,5,2\n");
    QuantalDataset so = standardize_doses(odd);
    CHECK(so.doses.back() == 1.0);
    CHECK(so.dose_scale == doctest::Approx(0.7));
}

TEST_CASE("packaged study file loads") {
    QuantalDataset d = load_dataset(std::string("data/bcme.csv"));
    REQUIRE(d.size() == 7);
    CHECK(d.n_total == 397);
    CHECK(d.subjects[2] == 26);
    CHECK(d.doses.back() == 100.0);
}
