#include "vcmo/touchstone.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "vcmo/io.hpp"

namespace vcmo {

namespace {

std::string to_upper(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return std::toupper(c); });
    return s;
}

std::string strip_comment(const std::string& line) {
    const auto pos = line.find('!');
    return pos == std::string::npos ? line : line.substr(0, pos);
}

bool parse_number(const std::string& tok, double& out) {
    try {
        size_t idx = 0;
        out = std::stod(tok, &idx);
        return idx == tok.size();
    } catch (...) {
        return false;
    }
}

std::string read_file(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw ParseError("cannot open " + path);
    std::ostringstream os;
    os << is.rdbuf();
    return os.str();
}

}  // namespace

TouchstoneOnePort parse_touchstone_1p(const std::string& content) {
    TouchstoneOnePort ts;
    bool saw_option = false;
    bool saw_data = false;
    std::istringstream stream(content);
    std::string raw;
    int line_no = 0;
    while (std::getline(stream, raw)) {
        ++line_no;
        if (!raw.empty() && raw.back() == '\r') raw.pop_back();
        std::string line = strip_comment(raw);
        std::istringstream ls(line);
        std::vector<std::string> toks;
        for (std::string t; ls >> t;) toks.push_back(t);
        if (toks.empty()) continue;

        if (toks[0] == "#") {
            if (saw_data)
                throw ParseError("touchstone line " + std::to_string(line_no) +
                                 ": option line after data");
            saw_option = true;
            for (std::size_t i = 1; i < toks.size(); ++i) {
                const std::string t = to_upper(toks[i]);
                if (t == "HZ") ts.freq_unit_hz = 1.0;
                else if (t == "KHZ") ts.freq_unit_hz = 1e3;
                else if (t == "MHZ") ts.freq_unit_hz = 1e6;
                else if (t == "GHZ") ts.freq_unit_hz = 1e9;
                else if (t == "S" || t == "Y") ts.parameter = t[0];
                else if (t == "Z" || t == "H" || t == "G")
                    throw ParseError("touchstone: unsupported parameter type " + t);
                else if (t == "MA") ts.format = TouchstoneOnePort::Format::MA;
                else if (t == "DB") ts.format = TouchstoneOnePort::Format::DB;
                else if (t == "RI") ts.format = TouchstoneOnePort::Format::RI;
                else if (t == "R") {
                    if (i + 1 >= toks.size() || !parse_number(toks[i + 1], ts.z0_ohm))
                        throw ParseError("touchstone: malformed R entry on option line");
                    ++i;
                } else {
                    throw ParseError("touchstone: unknown option token " + toks[i]);
                }
            }
            continue;
        }

        if (toks.size() != 3)
            throw ParseError("touchstone line " + std::to_string(line_no) +
                             ": expected 3 columns for a one-port row, got " +
                             std::to_string(toks.size()));
        std::array<double, 3> row{};
        for (int c = 0; c < 3; ++c)
            if (!parse_number(toks[c], row[c]))
                throw ParseError("touchstone line " + std::to_string(line_no) +
                                 ": bad number '" + toks[c] + "'");
        if (!ts.rows.empty() && row[0] <= ts.rows.back()[0])
            throw ParseError("touchstone line " + std::to_string(line_no) +
                             ": frequencies must be strictly ascending");
        ts.rows.push_back(row);
        saw_data = true;
    }
    if (!saw_option) throw ParseError("touchstone: missing '#' option line before data");
    if (ts.rows.empty()) throw ParseError("touchstone: no data rows");
    return ts;
}

AdmittanceDataset touchstone_to_admittance(const TouchstoneOnePort& ts,
                                           const std::string& source) {
    std::vector<std::pair<double, Complex>> points;
    points.reserve(ts.rows.size());
    for (std::size_t i = 0; i < ts.rows.size(); ++i) {
        const auto& row = ts.rows[i];
        Complex v;
        switch (ts.format) {
            case TouchstoneOnePort::Format::MA:
                v = std::polar(row[1], row[2] * std::numbers::pi / 180.0);
                break;
            case TouchstoneOnePort::Format::DB:
                v = std::polar(std::pow(10.0, row[1] / 20.0),
                               row[2] * std::numbers::pi / 180.0);
                break;
            case TouchstoneOnePort::Format::RI:
                v = Complex(row[1], row[2]);
                break;
        }
        Complex y;
        if (ts.parameter == 'S') {
            if (std::abs(v + 1.0) < 1e-12)
                throw ParseError("touchstone data row " + std::to_string(i + 1) +
                                 ": S = -1 has no admittance equivalent");
            y = (1.0 - v) / (1.0 + v) / ts.z0_ohm;
        } else {  // normalized Y
            y = v / ts.z0_ohm;
        }
        points.emplace_back(row[0] * ts.freq_unit_hz, y);
    }
    return make_dataset(std::move(points), source);
}

AdmittanceDataset load_admittance(const std::string& path, const std::string& format_hint) {
    const std::string content = read_file(path);
    std::string kind = format_hint;
    if (kind == "auto") {
        if (path.size() >= 4 && to_upper(path.substr(path.size() - 4)) == ".S1P")
            kind = "touchstone";
        else if (content.find('#') != std::string::npos &&
                 content.find('!') != std::string::npos)
            kind = "touchstone";
        else
            kind = "csv";
    }
    if (kind == "touchstone")
        return touchstone_to_admittance(parse_touchstone_1p(content), path);
    if (kind != "csv")
        throw std::invalid_argument("load_admittance: unknown format hint " + format_hint);

    std::vector<std::pair<double, Complex>> points;
    std::istringstream stream(content);
    std::string raw;
    int line_no = 0;
    while (std::getline(stream, raw)) {
        ++line_no;
        if (!raw.empty() && raw.back() == '\r') raw.pop_back();
        std::string line = raw;
        std::replace(line.begin(), line.end(), ',', ' ');
        std::istringstream ls(line);
        std::vector<std::string> toks;
        for (std::string t; ls >> t;) toks.push_back(t);
        if (toks.empty()) continue;
        double f, re, im;
        if (!parse_number(toks[0], f)) {
            if (line_no == 1) continue;  // header line
            throw ParseError("csv line " + std::to_string(line_no) + ": bad frequency '" +
                             toks[0] + "'");
        }
        if (toks.size() != 3 || !parse_number(toks[1], re) || !parse_number(toks[2], im))
            throw ParseError("csv line " + std::to_string(line_no) +
                             ": expected 'f_hz, re_y, im_y'");
        if (!points.empty() && f <= points.back().first)
            throw ParseError("csv line " + std::to_string(line_no) +
                             ": frequencies must be strictly ascending");
        points.emplace_back(f, Complex(re, im));
    }
    return make_dataset(std::move(points), path);
}

void write_admittance_csv(const std::string& path, const AdmittanceDataset& d) {
    atomic_write_file(path, [&](std::ostream& os) {
        os << "f_hz,re_y,im_y\n";
        for (const auto& [f, y] : d.points)
            os << format_double(f) << ',' << format_double(y.real()) << ','
               << format_double(y.imag()) << '\n';
    });
}

}  // namespace vcmo
