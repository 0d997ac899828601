#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <limits>
#include <vector>

#include "topoattn/attention.hpp"
#include "topoattn/cubical.hpp"
#include "topoattn/error.hpp"

namespace py = pybind11;
using namespace topoattn;

namespace {

using FloatArray = py::array_t<float, py::array::c_style | py::array::forcecast>;

GridMap to_grid(const FloatArray& array) {
  if (array.ndim() != 2) throw ValidationError("expected a 2-D array");
  const auto h = static_cast<std::size_t>(array.shape(0));
  const auto w = static_cast<std::size_t>(array.shape(1));
  return GridMap(w, h, std::vector<float>(array.data(), array.data() + array.size()));
}

FloatArray attention(const FloatArray& probability, double percentile, int tolerance, double scale,
                     bool normalize, bool per_dimension, int max_level) {
  AttnConfig config;
  config.percentile = percentile;
  config.birth_tolerance = tolerance;
  config.scale = scale;
  config.normalize = normalize;
  config.pool_dimensions = !per_dimension;
  config.max_level = max_level;
  GridMap grid = to_grid(probability);
  AttentionMap map;
  {
    py::gil_scoped_release release;
    map = generate_attention_map(grid, config);
  }
  FloatArray out({map.height, map.width});
  float* dst = out.mutable_data();
  for (std::size_t i = 0; i < map.weights.size(); ++i) dst[i] = static_cast<float>(map.weights[i]);
  return out;
}

py::list persistence(const FloatArray& probability, int max_level) {
  GridMap grid = to_grid(probability);
  PersistenceDiagram pd;
  {
    py::gil_scoped_release release;
    pd = compute_persistence(quantize(grid, max_level));
  }
  py::list out;
  for (const auto& p : pd.pairs) {
    const py::object death = p.essential() ? py::object(py::float_(std::numeric_limits<double>::infinity()))
                                           : py::object(py::int_(p.death));
    out.append(py::make_tuple(p.dim, p.birth, death));
  }
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Topology-guided attention maps from probability grids.";
  m.attr("__version__") = TOPOATTN_VERSION;

  py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
  py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);
  py::register_exception<IoError>(m, "IoError", PyExc_OSError);
  py::register_exception<InvariantError>(m, "InvariantError", PyExc_RuntimeError);

  m.def("generate_attention_map", &attention, py::arg("probability"), py::kw_only(),
        py::arg("percentile") = 50.0, py::arg("tolerance") = 0, py::arg("scale") = 1.0,
        py::arg("normalize") = false, py::arg("per_dimension") = false,
        py::arg("max_level") = kDefaultMaxLevel,
        "Attention weights (float32, same shape) for a 2-D probability map in [0, 1].");
  m.def("compute_persistence", &persistence, py::arg("probability"), py::kw_only(),
        py::arg("max_level") = kDefaultMaxLevel,
        "Persistence pairs (dim, birth, death) of the quantized sublevel filtration.");
}
