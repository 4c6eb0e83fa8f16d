// python bindings for the main pipeline operations

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "tinyssd/eval.hpp"
#include "tinyssd/gradcheck.hpp"
#include "tinyssd/inference.hpp"
#include "tinyssd/loss.hpp"
#include "tinyssd/matching.hpp"
#include "tinyssd/priors.hpp"
#include "tinyssd/synth.hpp"

namespace py = pybind11;
using namespace tinyssd;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

BoxCorner corner_from(const Array& a, size_t row) {
  const double* p = a.data() + row * 4;
  return {p[0], p[1], p[2], p[3]};
}

Predictions<double> predictions_from(const Array& conf, const Array& loc) {
  if (conf.ndim() != 2 || loc.ndim() != 2 || loc.shape(1) != 4 ||
      conf.shape(0) != loc.shape(0) || conf.shape(1) < 2)
    throw std::invalid_argument(
        "expected conf (N, classes+1) and loc (N, 4) arrays");
  Predictions<double> pred;
  pred.num_priors = size_t(conf.shape(0));
  pred.num_classes = int(conf.shape(1)) - 1;
  pred.conf.assign(conf.data(), conf.data() + conf.size());
  pred.loc.assign(loc.data(), loc.data() + loc.size());
  return pred;
}

py::array_t<double> priors_as_array(const PriorSet& set) {
  py::array_t<double> out({set.size(), size_t(4)});
  double* p = out.mutable_data();
  for (size_t i = 0; i < set.size(); ++i) {
    p[i * 4 + 0] = set.boxes[i].cx;
    p[i * 4 + 1] = set.boxes[i].cy;
    p[i * 4 + 2] = set.boxes[i].w;
    p[i * 4 + 3] = set.boxes[i].h;
  }
  return out;
}

std::vector<GroundTruth> gts_from(const Array& boxes,
                                  const std::vector<int>& labels) {
  if (boxes.ndim() != 2 || boxes.shape(1) != 4 ||
      size_t(boxes.shape(0)) != labels.size())
    throw std::invalid_argument("expected boxes (N, 4) and N labels");
  std::vector<GroundTruth> gts;
  for (size_t j = 0; j < labels.size(); ++j)
    gts.push_back({corner_from(boxes, j), labels[j]});
  return gts;
}

}  // namespace

PYBIND11_MODULE(tinyssd, m) {
  m.doc() = "single-shot multibox detection pipeline";

  py::class_<LayerSpec>(m, "LayerSpec")
      .def(py::init<>())
      .def_readwrite("grid_size", &LayerSpec::grid_size)
      .def_readwrite("scale", &LayerSpec::scale)
      .def_readwrite("next_scale", &LayerSpec::next_scale)
      .def_readwrite("aspect_ratios", &LayerSpec::aspect_ratios)
      .def_readwrite("include_extra", &LayerSpec::include_extra)
      .def("boxes_per_cell", &LayerSpec::boxes_per_cell);

  py::class_<PriorSet>(m, "PriorSet")
      .def("__len__", &PriorSet::size)
      .def_property_readonly("boxes", &priors_as_array,
                             "array (N, 4) of cx, cy, w, h")
      .def_readonly("layer_of", &PriorSet::layer_of);

  py::class_<Detection>(m, "Detection")
      .def_readonly("label", &Detection::label)
      .def_readonly("score", &Detection::score)
      .def_property_readonly("box",
                             [](const Detection& d) {
                               return py::make_tuple(d.box.xmin, d.box.ymin,
                                                     d.box.xmax, d.box.ymax);
                             })
      .def("__repr__", [](const Detection& d) {
        return "Detection(label=" + std::to_string(d.label) +
               ", score=" + std::to_string(d.score) + ")";
      });

  m.def(
      "iou",
      [](py::tuple a, py::tuple b) {
        const BoxCorner ba{a[0].cast<double>(), a[1].cast<double>(),
                           a[2].cast<double>(), a[3].cast<double>()};
        const BoxCorner bb{b[0].cast<double>(), b[1].cast<double>(),
                           b[2].cast<double>(), b[3].cast<double>()};
        return iou(ba, bb);
      },
      "jaccard overlap of two (xmin, ymin, xmax, ymax) boxes");

  m.def("encode", [](py::tuple g, py::tuple d) {
    const BoxCenter bg{g[0].cast<double>(), g[1].cast<double>(),
                       g[2].cast<double>(), g[3].cast<double>()};
    const BoxCenter bd{d[0].cast<double>(), d[1].cast<double>(),
                       d[2].cast<double>(), d[3].cast<double>()};
    const OffsetVector t = encode(bg, bd);
    return py::make_tuple(t.tcx, t.tcy, t.tw, t.th);
  });

  m.def("decode", [](py::tuple t, py::tuple d) {
    const OffsetVector ot{t[0].cast<double>(), t[1].cast<double>(),
                          t[2].cast<double>(), t[3].cast<double>()};
    const BoxCenter bd{d[0].cast<double>(), d[1].cast<double>(),
                       d[2].cast<double>(), d[3].cast<double>()};
    const BoxCenter g = decode(ot, bd);
    return py::make_tuple(g.cx, g.cy, g.w, g.h);
  });

  m.def("layer_scales", &layer_scales, py::arg("m"), py::arg("s_min"),
        py::arg("s_max"));
  m.def("ssd300_layers", &ssd300_layers);
  m.def("ssd512_layers", &ssd512_layers);
  m.def(
      "toy_layers",
      [](const std::vector<int>& grids, double s_min, double s_max,
         double first_scale_override) {
        return toy_layers(grids, s_min, s_max, first_scale_override);
      },
      py::arg("grids"), py::arg("s_min") = 0.2, py::arg("s_max") = 0.9,
      py::arg("first_scale_override") = -1.0);
  m.def("build_priors", [](const std::vector<LayerSpec>& specs) {
    return build_priors(specs);
  });

  m.def(
      "match",
      [](const PriorSet& priors, const Array& boxes,
         const std::vector<int>& labels, double threshold) {
        const MatchAssignment a =
            match(priors, gts_from(boxes, labels), threshold);
        py::dict out;
        out["gt_index"] = a.gt_index;
        out["label"] = a.label;
        out["num_pos"] = a.num_pos;
        return out;
      },
      py::arg("priors"), py::arg("gt_boxes"), py::arg("gt_labels"),
      py::arg("threshold") = 0.5);

  m.def(
      "multibox_loss",
      [](const Array& conf, const Array& loc, const PriorSet& priors,
         const Array& gt_boxes, const std::vector<int>& gt_labels,
         double alpha, double neg_pos_ratio, double match_threshold) {
        const Predictions<double> pred = predictions_from(conf, loc);
        if (pred.num_priors != priors.size())
          throw std::invalid_argument("prediction rows != prior count");
        const MatchAssignment a =
            match(priors, gts_from(gt_boxes, gt_labels), match_threshold);
        const LossReport<double> r =
            multibox_loss(pred, a, {alpha, neg_pos_ratio});
        py::dict out;
        out["conf_loss"] = r.conf_loss;
        out["loc_loss"] = r.loc_loss;
        out["total"] = r.total;
        out["num_pos"] = r.num_pos;
        return out;
      },
      py::arg("conf"), py::arg("loc"), py::arg("priors"), py::arg("gt_boxes"),
      py::arg("gt_labels"), py::arg("alpha") = 1.0,
      py::arg("neg_pos_ratio") = 3.0, py::arg("match_threshold") = 0.5);

  m.def(
      "nms",
      [](const std::vector<double>& scores, const Array& boxes,
         double iou_threshold) {
        if (boxes.ndim() != 2 || boxes.shape(1) != 4 ||
            size_t(boxes.shape(0)) != scores.size())
          throw std::invalid_argument("expected N scores and (N, 4) boxes");
        std::vector<BoxCorner> bc(scores.size());
        for (size_t i = 0; i < scores.size(); ++i)
          bc[i] = corner_from(boxes, i);
        return nms(scores, bc, iou_threshold);
      },
      py::arg("scores"), py::arg("boxes"), py::arg("iou_threshold") = 0.45);

  m.def(
      "detect",
      [](const Array& conf, const Array& loc, const PriorSet& priors,
         double conf_threshold, double nms_iou, int top_k) {
        const Predictions<double> pred = predictions_from(conf, loc);
        return detect(pred, priors, {conf_threshold, nms_iou, top_k});
      },
      py::arg("conf"), py::arg("loc"), py::arg("priors"),
      py::arg("conf_threshold") = 0.01, py::arg("nms_iou") = 0.45,
      py::arg("top_k") = 200);

  m.def(
      "average_precision",
      [](const std::vector<std::tuple<int, int, double, py::tuple>>& dets,
         const std::vector<std::vector<std::tuple<py::tuple, int>>>& gts,
         int cls, double iou_threshold, const std::string& interpolation) {
        std::vector<DetRecord> records;
        for (const auto& [image_id, label, score, box] : dets)
          records.push_back({image_id, label, score,
                             {box[0].cast<double>(), box[1].cast<double>(),
                              box[2].cast<double>(), box[3].cast<double>()}});
        std::vector<std::vector<GtAnnotation>> gt_lists(gts.size());
        for (size_t im = 0; im < gts.size(); ++im)
          for (const auto& [box, label] : gts[im])
            gt_lists[im].push_back({{box[0].cast<double>(),
                                     box[1].cast<double>(),
                                     box[2].cast<double>(),
                                     box[3].cast<double>()},
                                    label,
                                    false});
        EvalConfig cfg;
        cfg.iou_threshold = iou_threshold;
        cfg.interpolation = interpolation == "all_points"
                                ? ApInterpolation::all_points
                                : ApInterpolation::eleven_point;
        return average_precision(records, gt_lists, cls, cfg).ap;
      },
      py::arg("detections"), py::arg("ground_truths"), py::arg("cls"),
      py::arg("iou_threshold") = 0.5,
      py::arg("interpolation") = "eleven_point",
      "detections: (image_id, label, score, box) tuples; ground_truths: per "
      "image lists of (box, label)");

  m.def("mean_ap",
        [](const std::vector<double>& aps) { return mean_ap(aps); });

  m.def(
      "synth_image",
      [](uint64_t seed, uint64_t index, int image_size) {
        SynthConfig cfg;
        cfg.image_size = image_size;
        const ImageSample s = synth_image(seed, index, cfg);
        py::array_t<float> img(
            {size_t(s.image.height), size_t(s.image.width)});
        std::copy(s.image.data.begin(), s.image.data.end(),
                  img.mutable_data());
        py::list gts;
        for (const GroundTruth& gt : s.gts)
          gts.append(py::make_tuple(gt.label, gt.box.xmin, gt.box.ymin,
                                    gt.box.xmax, gt.box.ymax));
        return py::make_tuple(img, gts);
      },
      py::arg("seed"), py::arg("index") = 0, py::arg("image_size") = 64);

  m.def(
      "gradcheck",
      [](uint64_t seed, int instances) {
        const GradCheckReport r = run_gradcheck(seed, instances);
        return py::make_tuple(r.max_rel_err_loss, r.max_rel_err_net);
      },
      py::arg("seed") = 1, py::arg("instances") = 5);
}
