#include "dsr/mesh_io.h"

#include <fstream>
#include <sstream>
#include <string>

#include "dsr/container.h"

namespace dsr {

void write_obj(const std::filesystem::path& path, const TriangleMesh& mesh) {
  std::ofstream out(path);
  DSR_CHECK_INPUT(out.good(), "cannot open '{}' for writing", path.string());
  for (Eigen::Index v = 0; v < mesh.vertices.rows(); ++v) {
    out << fmt::format("v {:.17g} {:.17g} {:.17g}\n", mesh.vertices(v, 0), mesh.vertices(v, 1),
                       mesh.vertices(v, 2));
  }
  for (Eigen::Index f = 0; f < mesh.faces.rows(); ++f) {
    out << fmt::format("f {} {} {}\n", mesh.faces(f, 0) + 1, mesh.faces(f, 1) + 1,
                       mesh.faces(f, 2) + 1);
  }
}

TriangleMesh read_obj(const std::filesystem::path& path) {
  std::ifstream in(path);
  DSR_CHECK_INPUT(in.good(), "cannot open '{}'", path.string());
  std::vector<double> coords;
  std::vector<int> indices;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream ss(line);
    std::string tag;
    if (!(ss >> tag)) continue;
    if (tag == "v") {
      double x, y, z;
      DSR_CHECK_INPUT(static_cast<bool>(ss >> x >> y >> z), "{}:{}: malformed vertex",
                      path.string(), lineno);
      coords.insert(coords.end(), {x, y, z});
    } else if (tag == "f") {
      std::vector<int> face;
      std::string token;
      while (ss >> token) {
        // Accept v, v/vt, v//vn and v/vt/vn; only the position index is used.
        face.push_back(std::stoi(token.substr(0, token.find('/'))) - 1);
      }
      DSR_CHECK_INPUT(face.size() == 3, "{}:{}: only triangular faces are supported",
                      path.string(), lineno);
      indices.insert(indices.end(), face.begin(), face.end());
    }
  }
  TriangleMesh mesh;
  mesh.vertices = Eigen::Map<const Vertices>(coords.data(), static_cast<Eigen::Index>(coords.size() / 3), 3);
  mesh.faces = Eigen::Map<const Faces>(indices.data(), static_cast<Eigen::Index>(indices.size() / 3), 3);
  const int nv = static_cast<int>(mesh.vertices.rows());
  for (int idx : indices) {
    DSR_CHECK_INPUT(idx >= 0 && idx < nv, "{}: face index {} outside [1, {}]", path.string(),
                    idx + 1, nv);
  }
  return mesh;
}

nlohmann::json camera_to_json(const Camera& camera) {
  return {{"s", camera.scale}, {"tx", camera.tx}, {"ty", camera.ty}};
}

Camera camera_from_json(const nlohmann::json& j) {
  Camera c;
  c.scale = j.at("s").get<double>();
  c.tx = j.at("tx").get<double>();
  c.ty = j.at("ty").get<double>();
  return c;
}

nlohmann::json params_to_json(const BodyParams& params) {
  return {{"theta", std::vector<double>(params.theta.data(), params.theta.data() + params.theta.size())},
          {"beta", std::vector<double>(params.beta.data(), params.beta.data() + params.beta.size())},
          {"camera", camera_to_json(params.camera)}};
}

BodyParams params_from_json(const nlohmann::json& j) {
  BodyParams p;
  try {
    const auto theta = j.at("theta").get<std::vector<double>>();
    const auto beta = j.at("beta").get<std::vector<double>>();
    p.theta = Eigen::Map<const Eigen::VectorXd>(theta.data(), static_cast<Eigen::Index>(theta.size()));
    p.beta = Eigen::Map<const Eigen::VectorXd>(beta.data(), static_cast<Eigen::Index>(beta.size()));
    p.camera = camera_from_json(j.at("camera"));
  } catch (const nlohmann::json::exception& e) {
    throw InputError(fmt::format("malformed body parameters: {}", e.what()));
  }
  p.validate();
  return p;
}

namespace {

template <typename M>
nlohmann::json rows_to_json(const M& m) {
  nlohmann::json out = nlohmann::json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    out.push_back(row);
  }
  return out;
}

template <typename M>
M rows_from_json(const nlohmann::json& j, int cols, const char* what) {
  DSR_CHECK_INPUT(j.is_array(), "'{}' must be a list of rows", what);
  M m(static_cast<Eigen::Index>(j.size()), cols);
  for (std::size_t r = 0; r < j.size(); ++r) {
    const auto row = j[r].get<std::vector<double>>();
    DSR_CHECK_INPUT(static_cast<int>(row.size()) == cols, "'{}' row {} has {} entries, expected {}",
                    what, r, row.size(), cols);
    for (int c = 0; c < cols; ++c) m(static_cast<Eigen::Index>(r), c) = row[c];
  }
  return m;
}

nlohmann::json vector_to_json(const Eigen::VectorXd& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

Eigen::VectorXd vector_from_json(const nlohmann::json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace

nlohmann::json joint_targets_to_json(const JointTargets& targets) {
  nlohmann::json j = nlohmann::json::object();
  if (targets.joints_2d) j["joints_2d"] = rows_to_json(*targets.joints_2d);
  if (targets.confidence.size() > 0) j["confidence"] = vector_to_json(targets.confidence);
  if (targets.joints_3d) j["joints_3d"] = rows_to_json(*targets.joints_3d);
  if (targets.weights_3d.size() > 0) j["weights_3d"] = vector_to_json(targets.weights_3d);
  if (targets.params) j["params"] = params_to_json(*targets.params);
  return j;
}

JointTargets joint_targets_from_json(const nlohmann::json& j) {
  DSR_CHECK_INPUT(j.is_object(), "joint targets must be a JSON object");
  JointTargets t;
  try {
    if (j.contains("joints_2d")) t.joints_2d = rows_from_json<Points2>(j["joints_2d"], 2, "joints_2d");
    if (j.contains("confidence")) t.confidence = vector_from_json(j["confidence"]);
    if (j.contains("joints_3d")) t.joints_3d = rows_from_json<Vertices>(j["joints_3d"], 3, "joints_3d");
    if (j.contains("weights_3d")) t.weights_3d = vector_from_json(j["weights_3d"]);
    if (j.contains("params")) t.params = params_from_json(j["params"]);
  } catch (const nlohmann::json::exception& e) {
    throw InputError(fmt::format("malformed joint targets: {}", e.what()));
  }
  return t;
}

nlohmann::json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  DSR_CHECK_INPUT(in.good(), "cannot open '{}'", path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw InputError(fmt::format("{}: {}", path.string(), e.what()));
  }
}

void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
  std::ofstream out(path);
  DSR_CHECK_INPUT(out.good(), "cannot open '{}' for writing", path.string());
  out << j.dump(2) << '\n';
}

void write_params(const std::filesystem::path& path, const BodyParams& params) {
  write_json(path, params_to_json(params));
}

BodyParams read_params(const std::filesystem::path& path) {
  try {
    return params_from_json(read_json(path));
  } catch (const InputError& e) {
    throw InputError(fmt::format("{}: {}", path.string(), e.what()));
  }
}

void save_template(const std::filesystem::path& path, const BodyTemplate& body) {
  body.validate();
  const std::int64_t nv = body.num_vertices();
  const std::int64_t nj = body.num_joints();
  Container c;
  c.meta = {{"kind", "body_template"},
            {"num_vertices", nv},
            {"num_faces", body.faces.rows()},
            {"num_joints", nj},
            {"num_shape", body.num_shape()}};
  c.put_f64("template_vertices", {nv, 3},
            std::span(body.template_vertices.data(), body.template_vertices.size()));
  c.put_i32("faces", {body.faces.rows(), 3}, std::span(body.faces.data(), body.faces.size()));
  std::vector<std::int32_t> rows, cols;
  std::vector<double> vals;
  for (int j = 0; j < body.joint_regressor.outerSize(); ++j) {
    for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(body.joint_regressor, j); it; ++it) {
      rows.push_back(static_cast<std::int32_t>(it.row()));
      cols.push_back(static_cast<std::int32_t>(it.col()));
      vals.push_back(it.value());
    }
  }
  const auto nnz = static_cast<std::int64_t>(vals.size());
  c.put_i32("joint_regressor_rows", {nnz}, rows);
  c.put_i32("joint_regressor_cols", {nnz}, cols);
  c.put_f64("joint_regressor_values", {nnz}, vals);
  c.put_f64("skin_weights", {nv, nj}, std::span(body.skin_weights.data(), body.skin_weights.size()));
  // In memory the blendshapes are (V, 3K) with column 3k + axis; on disk (V, 3, K).
  const int nk = body.num_shape();
  std::vector<double> dirs(body.shape_dirs.size());
  for (int v = 0; v < nv; ++v) {
    for (int a = 0; a < 3; ++a) {
      for (int k = 0; k < nk; ++k) dirs[(v * 3 + a) * nk + k] = body.shape_dirs(v, 3 * k + a);
    }
  }
  c.put_f64("shape_dirs", {nv, 3, nk}, dirs);
  std::vector<std::int32_t> parts(body.part_labels.begin(), body.part_labels.end());
  if (parts.empty()) parts.assign(nv, -1);
  c.put_i32("part_labels", {nv}, parts);
  std::vector<std::int32_t> parents(body.parents.begin(), body.parents.end());
  c.put_i32("parents", {nj}, parents);
  c.write(path);
}

BodyTemplate load_template(const std::filesystem::path& path) {
  const Container c = Container::read(path);
  DSR_CHECK_INPUT(c.meta.value("kind", "") == "body_template", "'{}' is not a body template",
                  path.string());
  BodyTemplate body;
  const auto vshape = c.shape("template_vertices");
  DSR_CHECK_INPUT(vshape.size() == 2 && vshape[1] == 3, "template_vertices must be Vx3");
  const auto nv = static_cast<Eigen::Index>(vshape[0]);
  const auto verts = c.get_f64("template_vertices");
  body.template_vertices = Eigen::Map<const Vertices>(verts.data(), nv, 3);
  const auto faces = c.get_i32("faces");
  body.faces = Eigen::Map<const Faces>(faces.data(), static_cast<Eigen::Index>(faces.size() / 3), 3);
  const auto parents = c.get_i32("parents");
  body.parents.assign(parents.begin(), parents.end());
  const auto nj = static_cast<Eigen::Index>(parents.size());

  const auto rows = c.get_i32("joint_regressor_rows");
  const auto cols = c.get_i32("joint_regressor_cols");
  const auto vals = c.get_f64("joint_regressor_values");
  DSR_CHECK_INPUT(rows.size() == cols.size() && cols.size() == vals.size(),
                  "joint regressor arrays disagree in length");
  std::vector<Eigen::Triplet<double>> trips;
  for (std::size_t i = 0; i < vals.size(); ++i) {
    DSR_CHECK_INPUT(rows[i] >= 0 && rows[i] < nj && cols[i] >= 0 && cols[i] < nv,
                    "joint regressor entry {} out of range", i);
    trips.emplace_back(rows[i], cols[i], vals[i]);
  }
  body.joint_regressor.resize(nj, nv);
  body.joint_regressor.setFromTriplets(trips.begin(), trips.end());

  const auto skin = c.get_f64("skin_weights");
  DSR_CHECK_INPUT(static_cast<Eigen::Index>(skin.size()) == nv * nj, "skin_weights must be VxJ");
  body.skin_weights = Eigen::Map<const RowMatrix>(skin.data(), nv, nj);

  const auto sshape = c.shape("shape_dirs");
  DSR_CHECK_INPUT(sshape.size() == 3 && sshape[0] == nv && sshape[1] == 3,
                  "shape_dirs must be Vx3xK");
  const auto nk = static_cast<int>(sshape[2]);
  const auto dirs = c.get_f64("shape_dirs");
  body.shape_dirs.resize(nv, 3 * nk);
  for (Eigen::Index v = 0; v < nv; ++v) {
    for (int a = 0; a < 3; ++a) {
      for (int k = 0; k < nk; ++k) body.shape_dirs(v, 3 * k + a) = dirs[(v * 3 + a) * nk + k];
    }
  }
  const auto parts = c.get_i32("part_labels");
  body.part_labels.assign(parts.begin(), parts.end());
  body.validate();
  return body;
}

}  // namespace dsr
