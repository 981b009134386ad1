#pragma once

#include <array>
#include <stdexcept>
#include <string>
#include <vector>

#include "vcmo/fit.hpp"

namespace vcmo {

class ParseError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// One-port Touchstone v1 subset: '#' option line, '!' comments, data rows
// ascending in frequency. Z/Y data follow the v1 normalization convention.
struct TouchstoneOnePort {
    enum class Format { MA, DB, RI };
    double freq_unit_hz = 1e9;  // multiplier for the frequency column
    char parameter = 'S';       // 'S' or 'Y'
    Format format = Format::MA;
    double z0_ohm = 50.0;
    std::vector<std::array<double, 3>> rows;  // f (file units), a, b
};

TouchstoneOnePort parse_touchstone_1p(const std::string& content);

// S converted via Y = (1/Z0)*(1 - S)/(1 + S); S = -1 rows are singular and
// rejected with their row number. Normalized Y data are scaled by 1/Z0.
AdmittanceDataset touchstone_to_admittance(const TouchstoneOnePort& ts,
                                           const std::string& source);

// format_hint: "auto", "csv" or "touchstone". CSV columns: f_hz, re_y, im_y.
AdmittanceDataset load_admittance(const std::string& path,
                                  const std::string& format_hint = "auto");

// CSV export matching the load_admittance CSV schema.
void write_admittance_csv(const std::string& path, const AdmittanceDataset& d);

}  // namespace vcmo
