// File formats: field definition JSON, grid-field JSON header + binary/base64
// blob, CSV dumps for trajectories, slices and projection tables, and a small
// structural JSON-schema checker for the report documents.
#pragma once

#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <json.hpp>

#include "curvislice/manifold.hpp"

namespace curvislice {

using Json = nlohmann::json;

// ---------------------------------------------------------------------------
// base64

inline std::string base64_encode(const unsigned char* data, size_t len) {
  static const char* tbl = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
  std::string out;
  out.reserve((len + 2) / 3 * 4);
  for (size_t i = 0; i < len; i += 3) {
    unsigned v = data[i] << 16;
    if (i + 1 < len) v |= data[i + 1] << 8;
    if (i + 2 < len) v |= data[i + 2];
    out.push_back(tbl[(v >> 18) & 63]);
    out.push_back(tbl[(v >> 12) & 63]);
    out.push_back(i + 1 < len ? tbl[(v >> 6) & 63] : '=');
    out.push_back(i + 2 < len ? tbl[v & 63] : '=');
  }
  return out;
}

inline std::vector<unsigned char> base64_decode(const std::string& s) {
  auto val = [](char c) -> int {
    if (c >= 'A' && c <= 'Z') return c - 'A';
    if (c >= 'a' && c <= 'z') return c - 'a' + 26;
    if (c >= '0' && c <= '9') return c - '0' + 52;
    if (c == '+') return 62;
    if (c == '/') return 63;
    return -1;
  };
  std::vector<unsigned char> out;
  int buf = 0, bits = 0;
  for (char c : s) {
    if (c == '=' || c == '\n' || c == '\r') continue;
    int v = val(c);
    if (v < 0) throw ConfigError("base64: invalid character");
    buf = (buf << 6) | v;
    bits += 6;
    if (bits >= 8) {
      bits -= 8;
      out.push_back(static_cast<unsigned char>((buf >> bits) & 0xff));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Vec / Box JSON helpers

inline Json to_json(const Vec& v) {
  Json a = Json::array();
  for (int i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

inline Vec vec_from_json(const Json& a) {
  if (!a.is_array()) throw ConfigError("expected a numeric array");
  Vec v(a.size());
  for (size_t i = 0; i < a.size(); ++i) v[i] = a[i].get<double>();
  return v;
}

inline Json box_to_json(const Box& b) {
  return Json{{"origin", to_json(b.origin)}, {"extents", to_json(b.extents)}};
}

inline Box box_from_json(const Json& j) {
  return Box(vec_from_json(j.at("origin")), vec_from_json(j.at("extents")));
}

// ---------------------------------------------------------------------------
// Field definition file
//   {"dim": n, "kind": "zero"|"christoffel"|"shell"|"tensor", ...}

inline QuadraticField field_from_json(const Json& j) {
  std::string kind = j.at("kind").get<std::string>();
  if (kind == "zero") {
    int dim = j.at("dim").get<int>();
    Box box = j.contains("box") ? box_from_json(j.at("box")) : Box::cube(dim, -1, 1);
    return QuadraticField::zero(dim, box);
  }
  if (kind == "christoffel" || kind == "tensor") {
    // a metric given as a grid of g entries (upper triangle, row-major)
    if (j.contains("metric_grid")) {
      const Json& gj = j.at("metric_grid");
      int dim = j.at("dim").get<int>();
      Box gbox = box_from_json(j.at("box"));
      std::vector<int> shape = gj.at("shape").get<std::vector<int>>();
      std::vector<double> values;
      if (gj.contains("values_base64")) {
        auto raw = base64_decode(gj.at("values_base64").get<std::string>());
        values.resize(raw.size() / sizeof(double));
        std::memcpy(values.data(), raw.data(), raw.size());
      } else {
        values = gj.at("values").get<std::vector<double>>();
      }
      int tri = SymMatrix::tri_size(dim);
      GridField samples = GridField::from_data(gbox, shape, tri, std::move(values));
      MetricChart chart(dim, gbox, [samples, dim](const Vec& x) {
        Vec row = samples.eval(x);
        SymMatrix g(dim);
        int c = 0;
        for (int i = 0; i < dim; ++i)
          for (int jj = i; jj < dim; ++jj) g.at(i, jj) = row[c++];
        return g.to_matrix();
      });
      if (j.contains("h_gamma"))
        chart.set_gamma_mode(GammaMode::FiniteDifference, j.at("h_gamma").get<double>());
      return christoffel_field(chart);
    }
    // tensor kind with a named builtin resolves to its Christoffel tensor
    std::string name = j.contains("metric")    ? j.at("metric").get<std::string>()
                       : j.contains("builtin") ? j.at("builtin").get<std::string>()
                                               : "";
    Box box = j.contains("box") ? box_from_json(j.at("box")) : Box();
    if (name == "hyperbolic-halfplane") {
      MetricChart chart = hyperbolic_halfplane_chart(box);
      if (j.value("gamma_mode", "analytic") == std::string("finite-difference"))
        chart.set_gamma_mode(GammaMode::FiniteDifference, j.value("h_gamma", -1.0));
      return christoffel_field(chart);
    }
    if (name == "sphere-chart") {
      MetricChart chart = sphere_chart(box);
      if (j.value("gamma_mode", "analytic") == std::string("finite-difference"))
        chart.set_gamma_mode(GammaMode::FiniteDifference, j.value("h_gamma", -1.0));
      return christoffel_field(chart);
    }
    if (kind == "tensor" && j.contains("grid")) {
      // G sampled on a regular grid: components stored l-major, then the
      // upper triangle (i <= j) fastest
      const Json& gj = j.at("grid");
      int dim = j.at("dim").get<int>();
      Box gbox = box_from_json(j.at("box"));
      std::vector<int> shape = gj.at("shape").get<std::vector<int>>();
      std::vector<double> values;
      if (gj.contains("values_base64")) {
        auto raw = base64_decode(gj.at("values_base64").get<std::string>());
        values.resize(raw.size() / sizeof(double));
        std::memcpy(values.data(), raw.data(), raw.size());
      } else {
        values = gj.at("values").get<std::vector<double>>();
      }
      int tri = SymMatrix::tri_size(dim);
      GridField samples = GridField::from_data(gbox, shape, dim * tri, std::move(values));
      return QuadraticField(dim, gbox, [samples, dim, tri](const Vec& x) {
        Vec row = samples.eval(x);
        CoeffTensor g(dim, SymMatrix(dim));
        int c = 0;
        for (int l = 0; l < dim; ++l)
          for (int i = 0; i < dim; ++i)
            for (int jj = i; jj < dim; ++jj) g[l].at(i, jj) = row[c++];
        (void)tri;
        return g;
      });
    }
    throw ConfigError("field_from_json: unknown metric/builtin '" + name + "'");
  }
  if (kind == "shell") {
    Box box = j.contains("box") ? box_from_json(j.at("box")) : Box::cube(3, -1, 1);
    // constant-Hessian theta: {"theta_hessian": [[a,b],[b,c]]}
    Mat h = Mat::Zero(2, 2);
    if (j.contains("theta_hessian")) {
      auto rows = j.at("theta_hessian");
      for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b) h(a, b) = rows[a][b].get<double>();
    }
    return shallow_shell_field([h](const Vec&) { return h; }, box);
  }
  throw ConfigError("field_from_json: unknown kind '" + kind + "'");
}

inline QuadraticField load_field(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("load_field: cannot open " + path);
  Json j;
  in >> j;
  return field_from_json(j);
}

// ---------------------------------------------------------------------------
// GridField file: JSON header + blob (inline base64 or sidecar binary file)

inline void save_gridfield(const GridField& g, const std::string& path, bool inline_base64 = true) {
  if (!g.has_grid()) throw ConfigError("save_gridfield: callback-only field has no samples");
  Json j;
  j["header"] = {{"dim", g.dim()},
                 {"origin", to_json(g.box().origin)},
                 {"spacing", to_json(g.spacing())},
                 {"shape", g.shape()},
                 {"components", g.components()}};
  const auto& vals = g.values();
  if (inline_base64) {
    j["data_base64"] = base64_encode(reinterpret_cast<const unsigned char*>(vals.data()),
                                     vals.size() * sizeof(double));
  } else {
    std::string bin = path + ".bin";
    std::ofstream out(bin, std::ios::binary);
    out.write(reinterpret_cast<const char*>(vals.data()),
              static_cast<std::streamsize>(vals.size() * sizeof(double)));
    j["data_file"] = bin.substr(bin.find_last_of('/') + 1);
  }
  std::ofstream out(path);
  out << j.dump(2) << "\n";
}

inline GridField load_gridfield(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("load_gridfield: cannot open " + path);
  Json j;
  in >> j;
  const Json& h = j.at("header");
  Vec origin = vec_from_json(h.at("origin"));
  Vec spacing = vec_from_json(h.at("spacing"));
  std::vector<int> shape = h.at("shape").get<std::vector<int>>();
  int components = h.at("components").get<int>();
  Vec extents(origin.size());
  for (int k = 0; k < origin.size(); ++k) extents[k] = spacing[k] * (shape[k] - 1);
  std::vector<double> vals;
  if (j.contains("data_base64")) {
    auto raw = base64_decode(j.at("data_base64").get<std::string>());
    vals.resize(raw.size() / sizeof(double));
    std::memcpy(vals.data(), raw.data(), raw.size());
  } else if (j.contains("data_file")) {
    std::string dir = path.substr(0, path.find_last_of('/') + 1);
    std::ifstream bin(dir + j.at("data_file").get<std::string>(), std::ios::binary);
    if (!bin) throw ConfigError("load_gridfield: cannot open data file");
    bin.seekg(0, std::ios::end);
    auto len = bin.tellg();
    bin.seekg(0);
    vals.resize(static_cast<size_t>(len) / sizeof(double));
    bin.read(reinterpret_cast<char*>(vals.data()), len);
  } else {
    throw ConfigError("load_gridfield: no data_base64 or data_file");
  }
  return GridField::from_data(Box(origin, extents), shape, components, std::move(vals));
}

// ---------------------------------------------------------------------------
// CSV writers (printf %.17g keeps runs byte-identical)

inline std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline void write_trajectory_csv(const Trajectory& tr, std::ostream& out) {
  int n = static_cast<int>(tr.x.front().size());
  out << "t";
  for (int k = 1; k <= n; ++k) out << ",x_" << k;
  for (int k = 1; k <= n; ++k) out << ",v_" << k;
  out << "\n";
  for (int i = 0; i < tr.size(); ++i) {
    out << fmt(tr.t[i]);
    for (int k = 0; k < n; ++k) out << "," << fmt(tr.x[i][k]);
    for (int k = 0; k < n; ++k) out << "," << fmt(tr.v[i][k]);
    out << "\n";
  }
}

inline void write_slice_csv(const Slice1D& s, std::ostream& out) {
  int n = static_cast<int>(s.xi.size());
  out << "t,mask,value";
  for (int k = 1; k <= n; ++k) out << ",vel_" << k;
  out << "\n";
  for (int i = 0; i < s.size(); ++i) {
    out << fmt(s.t[i]) << "," << int(s.mask[i]) << "," << fmt(s.values[i]);
    for (int k = 0; k < n; ++k) out << "," << fmt(s.velocities[i][k]);
    out << "\n";
  }
}

inline void write_projection_table_csv(const ProjectionFamily& fam, std::ostream& out) {
  int n = static_cast<int>(fam.x0().size());
  out << "xi_index,y_index,t";
  for (int k = 1; k <= n; ++k) out << ",x_" << k;
  for (int k = 1; k <= n; ++k) out << ",vel_" << k;
  out << "\n";
  for (int d = 0; d < fam.size(); ++d) {
    const Parametrization& par = fam.projection(d).param();
    for (int yk = 0; yk < par.grid_size(); ++yk) {
      const Trajectory& tr = par.grid_trajectory(yk);
      for (int i = 0; i < tr.size(); ++i) {
        out << d << "," << yk << "," << fmt(tr.t[i]);
        for (int k = 0; k < n; ++k) out << "," << fmt(tr.x[i][k]);
        for (int k = 0; k < n; ++k) out << "," << fmt(tr.v[i][k]);
        out << "\n";
      }
    }
  }
}

// ---------------------------------------------------------------------------
// Minimal structural JSON-schema check: type / required / properties / items

inline bool json_matches_type(const Json& v, const std::string& t) {
  if (t == "object") return v.is_object();
  if (t == "array") return v.is_array();
  if (t == "string") return v.is_string();
  if (t == "number") return v.is_number();
  if (t == "integer") return v.is_number_integer();
  if (t == "boolean") return v.is_boolean();
  return true;
}

inline void validate_schema(const Json& doc, const Json& schema, const std::string& where = "$") {
  if (schema.contains("type")) {
    std::string t = schema.at("type").get<std::string>();
    if (!json_matches_type(doc, t))
      throw ConfigError("schema: " + where + " is not of type " + t);
  }
  if (schema.contains("required")) {
    for (const auto& key : schema.at("required")) {
      if (!doc.contains(key.get<std::string>()))
        throw ConfigError("schema: " + where + " missing required key " + key.get<std::string>());
    }
  }
  if (schema.contains("properties") && doc.is_object()) {
    for (auto& [key, sub] : schema.at("properties").items()) {
      if (doc.contains(key)) validate_schema(doc.at(key), sub, where + "." + key);
    }
  }
  if (schema.contains("items") && doc.is_array()) {
    for (size_t i = 0; i < doc.size(); ++i)
      validate_schema(doc[i], schema.at("items"), where + "[" + std::to_string(i) + "]");
  }
}

inline void validate_against_schema_file(const Json& doc, const std::string& schema_path) {
  std::ifstream in(schema_path);
  if (!in) throw ConfigError("schema file not found: " + schema_path);
  Json schema;
  in >> schema;
  validate_schema(doc, schema);
}

}  // namespace curvislice
