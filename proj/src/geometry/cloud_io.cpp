#include "ismp/geometry/cloud_io.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <vector>

#include "ismp/error.hpp"

namespace ismp {

namespace {

[[noreturn]] void parse_error(const std::string& path, std::size_t line, const std::string& what) {
    throw Error("geometry", "ParseError", path + ":" + std::to_string(line) + ": " + what);
}

bool parse_double(const std::string& token, double& out) {
    std::size_t used = 0;
    try {
        out = std::stod(token, &used);
    } catch (const std::exception&) {
        return false;
    }
    return used == token.size();
}

PointCloud finish(std::vector<Point3>&& pts, const std::string& path) {
    if (pts.empty()) throw Error("geometry", "EmptyCloud", path + ": no points");
    return PointCloud(std::move(pts));
}

PointCloud load_xyz(std::istream& in, const std::string& path) {
    std::vector<Point3> pts;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        std::istringstream ss(line);
        std::string tx, ty, tz, extra;
        if (!(ss >> tx)) continue;  // blank or comment-only line
        if (!(ss >> ty >> tz)) parse_error(path, lineno, "expected three coordinates");
        if (ss >> extra) parse_error(path, lineno, "trailing token '" + extra + "'");
        Point3 p;
        if (!parse_double(tx, p.x) || !parse_double(ty, p.y) || !parse_double(tz, p.z)) {
            parse_error(path, lineno, "malformed number");
        }
        if (!p.finite()) parse_error(path, lineno, "non-finite coordinate");
        pts.push_back(p);
    }
    return finish(std::move(pts), path);
}

PointCloud load_ply(std::istream& in, const std::string& path) {
    std::string line;
    std::size_t lineno = 0;
    auto next_line = [&]() -> std::string {
        if (!std::getline(in, line)) parse_error(path, lineno, "unexpected end of header");
        ++lineno;
        while (!line.empty() && (line.back() == '\r' || line.back() == '\n')) line.pop_back();
        return line;
    };

    if (next_line() != "ply") parse_error(path, lineno, "missing 'ply' magic");
    if (next_line() != "format ascii 1.0") parse_error(path, lineno, "only 'format ascii 1.0' is supported");

    std::size_t vertex_count = 0;
    bool have_element = false;
    int property_index = 0;
    static const char* kAxes[3] = {"x", "y", "z"};
    for (;;) {
        const std::string l = next_line();
        if (l == "end_header") break;
        std::istringstream ss(l);
        std::string keyword;
        ss >> keyword;
        if (keyword == "comment") continue;
        if (keyword == "element") {
            std::string name;
            long long count = -1;
            ss >> name >> count;
            if (have_element || name != "vertex" || count < 0) {
                parse_error(path, lineno, "only a single 'element vertex' is supported");
            }
            have_element = true;
            vertex_count = static_cast<std::size_t>(count);
            continue;
        }
        if (keyword == "property") {
            std::string type, name;
            ss >> type >> name;
            if (!have_element || property_index >= 3 || (type != "float" && type != "double") ||
                name != kAxes[property_index]) {
                parse_error(path, lineno, "only float x/y/z vertex properties are supported");
            }
            ++property_index;
            continue;
        }
        parse_error(path, lineno, "unsupported header keyword '" + keyword + "'");
    }
    if (!have_element || property_index != 3) {
        parse_error(path, lineno, "header must declare 'element vertex' with x/y/z properties");
    }

    std::vector<Point3> pts;
    pts.reserve(vertex_count);
    for (std::size_t i = 0; i < vertex_count; ++i) {
        if (!std::getline(in, line)) parse_error(path, lineno, "fewer vertices than declared");
        ++lineno;
        std::istringstream ss(line);
        std::string tx, ty, tz, extra;
        if (!(ss >> tx >> ty >> tz)) parse_error(path, lineno, "expected three coordinates");
        if (ss >> extra) parse_error(path, lineno, "trailing token '" + extra + "'");
        Point3 p;
        if (!parse_double(tx, p.x) || !parse_double(ty, p.y) || !parse_double(tz, p.z)) {
            parse_error(path, lineno, "malformed number");
        }
        if (!p.finite()) parse_error(path, lineno, "non-finite coordinate");
        pts.push_back(p);
    }
    return finish(std::move(pts), path);
}

}  // namespace

CloudFormat format_from_path(const std::string& path) {
    const std::size_t dot = path.find_last_of('.');
    std::string ext = dot == std::string::npos ? "" : path.substr(dot + 1);
    for (char& c : ext) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return ext == "ply" ? CloudFormat::PlyAscii : CloudFormat::XyzText;
}

PointCloud load_cloud(const std::string& path, CloudFormat format) {
    std::ifstream in(path);
    if (!in) throw Error("geometry", "ParseError", path + ": cannot open file");
    return format == CloudFormat::XyzText ? load_xyz(in, path) : load_ply(in, path);
}

PointCloud load_cloud(const std::string& path) { return load_cloud(path, format_from_path(path)); }

std::string format_value(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return buf;
}

void write_xyz(const PointCloud& cloud, std::ostream& out) {
    for (const Point3& p : cloud.points()) {
        out << format_value(p.x) << ' ' << format_value(p.y) << ' ' << format_value(p.z) << '\n';
    }
}

void save_cloud_xyz(const PointCloud& cloud, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("geometry", "ParseError", path + ": cannot open file for writing");
    write_xyz(cloud, out);
}

}  // namespace ismp
