// Copyright 2026 The floodpass Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// floodpass command line. Exit codes: 0 success, 1 usage error, 2 data error.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "floodpass.hpp"
#include "floodpass/synthetic.hpp"

namespace fs = std::filesystem;
using namespace floodpass;

namespace {

/// Data error tied to a file; printed as `<path>:<line>: <message>`.
struct FileError : std::runtime_error {
  FileError(const std::string& path, const Error& e)
      : std::runtime_error(path + (e.line() ? ":" + std::to_string(e.line()) : std::string()) + ": " +
                           std::string(to_string(e.kind())) + ": " + e.detail()) {}
  FileError(const std::string& path, const std::string& message) : std::runtime_error(path + ": " + message) {}
};

template <typename Parser>
auto read_file(const std::string& path, Parser parser, std::ios::openmode mode = std::ios::in) {
  std::ifstream in(path, mode);
  if (!in) throw FileError(path, "cannot open file");
  try {
    return parser(in);
  } catch (const Error& e) {
    throw FileError(path, e);
  }
}

template <typename Writer>
void write_file(const std::string& path, Writer writer, std::ios::openmode mode = std::ios::out) {
  if (path.empty() || path == "-") {
    writer(std::cout);
    return;
  }
  if (const auto parent = fs::path(path).parent_path(); !parent.empty()) fs::create_directories(parent);
  std::ofstream out(path, mode | std::ios::trunc);
  if (!out) throw FileError(path, "cannot open for writing");
  writer(out);
  if (!out) throw FileError(path, "write failed");
}

void log_warnings(const std::vector<std::string>& warnings) {
  for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
}

std::string first_line(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FileError(path, "cannot open file");
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    return line;
  }
  return {};
}

std::vector<FeatureMatrix> read_views(const std::vector<std::string>& paths) {
  std::vector<FeatureMatrix> views;
  for (const auto& p : paths) {
    views.push_back(read_file(p, [](std::istream& in) { return parse_fvec(in); }));
    for (const auto& v : views) {
      if (&v != &views.back() && v.view_name == views.back().view_name) {
        throw FileError(p, "duplicate view name '" + v.view_name + "'");
      }
    }
  }
  return views;
}

/// Orders `views` like the model's view list and restricts them to common ids.
std::vector<FeatureMatrix> views_for_model(std::vector<FeatureMatrix> views, const std::vector<std::string>& names) {
  std::vector<FeatureMatrix> ordered;
  for (const auto& name : names) {
    const auto it = std::find_if(views.begin(), views.end(), [&](const FeatureMatrix& v) { return v.view_name == name; });
    if (it == views.end()) throw Error(ErrorKind::ViewMismatch, "no feature file for model view '" + name + "'");
    ordered.push_back(*it);
  }
  if (ordered.size() != views.size()) throw Error(ErrorKind::ViewMismatch, "feature files include views the model does not use");
  LabelTable all;
  for (const auto& id : ordered.front().ids) all.emplace(id, "_");
  auto aligned = align_views(ordered, all);
  for (std::size_t k = 0; k < ordered.size(); ++k) {
    if (aligned.dropped_per_view[k] != 0) {
      std::cerr << "warning: view '" << ordered[k].view_name << "': " << aligned.dropped_per_view[k]
                << " ids missing from other views dropped\n";
    }
  }
  return std::move(aligned.dataset.views);
}

AugmentPolicy parse_flips(const std::string& flips, AugmentPolicy policy) {
  policy.flip_horizontal = policy.flip_vertical = policy.flip_both = false;
  if (flips == "none" || flips.empty()) return policy;
  for (auto f : text::split(flips, ',')) {
    if (f == "horizontal") policy.flip_horizontal = true;
    else if (f == "vertical") policy.flip_vertical = true;
    else if (f == "both") policy.flip_both = true;
    else throw CLI::ValidationError("--flips", "unknown flip '" + std::string(f) + "'");
  }
  return policy;
}

ImageLoader directory_loader(const std::string& dir) {
  return [dir](const std::string& image_id) {
    const std::string path = (fs::path(dir) / (image_id + ".ppm")).string();
    return read_file(path, [](std::istream& in) { return load_ppm(in); }, std::ios::binary);
  };
}

std::string describe_args(int argc, char** argv) {
  std::string out;
  for (int i = 1; i < argc; ++i) out += (i > 1 ? " " : "") + std::string(argv[i]);
  return out;
}

// ---------------------------------------------------------------------------

int cmd_validate(const std::vector<std::string>& paths) {
  for (const auto& path : paths) {
    const std::string head = first_line(path);
    std::ostringstream summary;
    summary << path << ": ";
    if (head.rfind("P6", 0) == 0) {
      const auto img = read_file(path, [](std::istream& in) { return load_ppm(in); }, std::ios::binary);
      summary << "PPM width=" << img.width << " height=" << img.height;
    } else if (head == "FVEC\t1") {
      const auto m = read_file(path, [](std::istream& in) { return parse_fvec(in); });
      summary << "FVEC view=" << m.view_name << " samples=" << m.rows() << " dim=" << m.dim;
    } else if (head == "LABELS\t1") {
      const auto t = read_file(path, [](std::istream& in) { return parse_labels(in); });
      std::map<std::string, std::size_t> counts;
      for (const auto& [id, l] : t) ++counts[l];
      summary << "LABELS samples=" << t.size();
      for (const auto& [l, c] : counts) summary << ' ' << l << '=' << c;
    } else if (head == "SCORE\t1") {
      const auto s = read_file(path, [](std::istream& in) { return parse_scores(in); });
      summary << "SCORE samples=" << s.rows() << " classes=" << text::join(s.classes);
    } else if (head == "PATCHES\t1") {
      const auto p = read_file(path, [](std::istream& in) { return parse_patches(in); });
      const auto labeled = std::count_if(p.begin(), p.end(), [](const PatchSpec& s) { return s.label.has_value(); });
      summary << "PATCHES patches=" << p.size() << " labeled=" << labeled;
    } else if (head == "PRED\t1") {
      const auto p = read_file(path, [](std::istream& in) { return parse_predictions(in); });
      summary << "PRED samples=" << p.size();
    } else if (head == "MODEL\t1") {
      const auto m = read_file(path, [](std::istream& in) { return parse_model(in); });
      summary << "MODEL classes=" << text::join(m.classes) << " dim=" << m.dim;
    } else if (head == "FUSION\t1") {
      const auto m = read_file(path, [](std::istream& in) { return parse_fusion(in); });
      summary << "FUSION strategy=" << to_string(m.strategy.tag) << " views=" << text::join(m.view_names);
    } else if (head == "CASCADE\t1") {
      const auto m = read_file(path, [](std::istream& in) { return parse_cascade(in); });
      summary << "CASCADE strategy=" << to_string(m.stage1.strategy.tag) << " views=" << text::join(m.stage1.view_names);
    } else {
      throw FileError(path, "MalformedHeader: unrecognized file type");
    }
    std::cout << summary.str() << '\n';
  }
  return 0;
}

struct SplitArgs {
  std::vector<std::string> features;
  std::string labels;
  double fraction = 0.6;
  std::uint64_t seed = 0;
  std::string out_dir;
};

int cmd_split(const SplitArgs& a) {
  const auto labels = read_file(a.labels, [](std::istream& in) { return parse_labels(in); });
  MultiViewDataset d;
  if (a.features.empty()) {
    FeatureMatrix index{"labels", {}, 1, {}};
    for (const auto& [id, l] : labels) {
      index.ids.push_back(id);
      index.values.push_back(0.0);
      d.labels.push_back(l);
    }
    d.views.push_back(std::move(index));
  } else {
    const auto views = read_views(a.features);
    auto aligned = align_views(views, labels);
    d = std::move(aligned.dataset);
    std::cerr << "aligned " << d.size() << " samples; " << aligned.dropped_labels << " labeled ids dropped\n";
  }
  const auto split = split_dataset(d, a.fraction, a.seed);
  log_warnings(split.warnings);
  write_file((fs::path(a.out_dir) / "train.labels").string(), [&](std::ostream& o) { write_labels(o, split.train.label_table()); });
  write_file((fs::path(a.out_dir) / "test.labels").string(), [&](std::ostream& o) { write_labels(o, split.test.label_table()); });
  write_file((fs::path(a.out_dir) / "split.meta").string(), [&](std::ostream& o) {
    o << "stratified\t1\ntrain_fraction\t" << text::format_exact(a.fraction) << "\nseed\t" << a.seed << "\nrounding\thalf_up\n";
    o << "train\t" << split.train.size() << "\ntest\t" << split.test.size() << '\n';
    for (const auto& w : split.warnings) o << "warning\t" << w << '\n';
  });
  std::cout << "split seed=" << a.seed << " train=" << split.train.size() << " test=" << split.test.size() << '\n';
  return 0;
}

struct TrainArgs {
  std::vector<std::string> features;
  std::string labels;
  std::string passability;
  std::string strategy = "double";
  std::string late_mode = "mean";
  bool no_block_norm = false;
  SvmHyperParams hp;
  double threshold1 = 0.5;
  double threshold2 = 0.5;
  std::size_t jobs = 1;
  std::string out;
};

int cmd_train(const TrainArgs& a, const std::string& invocation) {
  FusionStrategy s;
  s.tag = parse_fusion_tag(a.strategy);
  s.late_mode = parse_late_mode(a.late_mode);
  s.block_norm = !a.no_block_norm;
  const auto views = read_views(a.features);
  const auto labels = read_file(a.labels, [](std::istream& in) { return parse_labels(in); });
  auto aligned = align_views(views, labels);
  for (std::size_t k = 0; k < views.size(); ++k) {
    if (aligned.dropped_per_view[k]) {
      std::cerr << "view '" << views[k].view_name << "': dropped " << aligned.dropped_per_view[k] << " ids\n";
    }
  }
  if (aligned.dropped_labels) std::cerr << "labels: dropped " << aligned.dropped_labels << " ids without features\n";
  Diagnostics diag;
  std::ostringstream body;
  if (!a.passability.empty()) {
    const auto pass = read_file(a.passability, [](std::istream& in) { return parse_labels(in); });
    CascadeTrainInfo info;
    const auto m = train_cascade(aligned.dataset, pass, s, a.hp, a.threshold1, a.threshold2, a.jobs, &diag, &info);
    write_cascade(body, m);
    std::cout << "trained cascade strategy=" << a.strategy << " stage1_samples=" << info.stage1_samples
              << " stage2_samples=" << info.stage2_samples << " seed=" << a.hp.seed << '\n';
  } else {
    const auto m = train_fusion(aligned.dataset, s, a.hp, a.jobs, &diag);
    write_fusion(body, m);
    std::cout << "trained fusion strategy=" << a.strategy << " samples=" << aligned.dataset.size() << " seed=" << a.hp.seed << '\n';
  }
  log_warnings(diag.warnings);
  write_file(a.out, [&](std::ostream& o) {
    o << "# floodpass " << invocation << '\n';
    o << "# strategy=" << to_string(s.tag) << " late_mode=" << to_string(s.late_mode) << " block_norm=" << s.block_norm
      << " lambda=" << text::format_real(a.hp.lambda) << " epochs=" << a.hp.epochs << " seed=" << a.hp.seed
      << " standardized=1 calibration=platt_5fold\n";
    o << body.str();
  });
  return 0;
}

int cmd_predict(const std::string& model_path, const std::vector<std::string>& features, const std::string& out) {
  const std::string head = first_line(model_path);
  auto views = read_views(features);
  Diagnostics diag;
  if (head == "CASCADE\t1") {
    const auto m = read_file(model_path, [](std::istream& in) { return parse_cascade(in); });
    views = views_for_model(std::move(views), m.stage1.view_names);
    const auto labels = predict_cascade(m, views, &diag);
    write_file(out, [&](std::ostream& o) { write_predictions(o, labels); });
  } else if (head == "FUSION\t1") {
    const auto m = read_file(model_path, [](std::istream& in) { return parse_fusion(in); });
    views = views_for_model(std::move(views), m.view_names);
    const auto scores = predict_fusion(m, views, &diag);
    write_file(out, [&](std::ostream& o) { write_scores(o, scores); });
  } else {
    throw FileError(model_path, "MalformedHeader: expected a CASCADE or FUSION model");
  }
  log_warnings(diag.warnings);
  return 0;
}

struct EvaluateArgs {
  std::string pred;
  std::string labels;
  std::string passability;
  std::string format = "text";
  std::string out;
};

int cmd_evaluate(const EvaluateArgs& a, const std::string& invocation) {
  const auto labels = read_file(a.labels, [](std::istream& in) { return parse_labels(in); });
  std::vector<std::string> pred, truth;
  std::size_t no_truth = 0, no_passability = 0;
  EvalReport report;
  const std::string head = first_line(a.pred);
  if (head == "PRED\t1") {
    LabelTable pass;
    if (!a.passability.empty()) pass = read_file(a.passability, [](std::istream& in) { return parse_labels(in); });
    const auto preds = read_file(a.pred, [](std::istream& in) { return parse_predictions(in); });
    for (const auto& p : preds) {
      const auto it = labels.find(p.id);
      if (it == labels.end()) {
        ++no_truth;
        continue;
      }
      std::string t;
      if (it->second == kNoEvidence) {
        t = std::string(kNoEvidence);
      } else if (it->second == kEvidence) {
        const auto pit = pass.find(p.id);
        if (pit == pass.end()) {
          ++no_passability;
          continue;
        }
        t = pit->second;
      } else {
        throw FileError(a.labels, "InvalidLabel: '" + it->second + "' is not evidence/no_evidence");
      }
      pred.push_back(p.value);
      truth.push_back(t);
    }
    if (pred.empty()) throw Error(ErrorKind::EmptyCounts, "no prediction has a truth label");
    report = evaluate(pred, truth, cascade_labels(), true);
  } else if (head == "SCORE\t1") {
    const auto scores = read_file(a.pred, [](std::istream& in) { return parse_scores(in); });
    for (std::size_t i = 0; i < scores.rows(); ++i) {
      const auto it = labels.find(scores.ids[i]);
      if (it == labels.end()) {
        ++no_truth;
        continue;
      }
      pred.push_back(scores.classes[scores.argmax(i)]);
      truth.push_back(it->second);
    }
    if (pred.empty()) throw Error(ErrorKind::EmptyCounts, "no prediction has a truth label");
    report = evaluate(pred, truth, scores.classes, false);
  } else {
    throw FileError(a.pred, "MalformedHeader: expected PRED or SCORE predictions");
  }
  if (no_truth) report.flags.push_back(std::to_string(no_truth) + " predictions without a truth label skipped");
  if (no_passability) {
    report.flags.push_back(std::to_string(no_passability) + " evidence predictions without passability truth skipped");
  }
  report.set_meta("command", invocation);
  report.set_meta("predictions", a.pred);
  report.set_meta("labels", a.labels);
  if (!a.passability.empty()) report.set_meta("passability", a.passability);
  const auto format = a.format == "json" ? ReportFormat::Json : ReportFormat::Text;
  write_file(a.out, [&](std::ostream& o) { o << render_report(report, format); });
  if (!a.out.empty() && a.out != "-") {
    std::cout << "accuracy=" << format_percent(report.overall_accuracy);
    if (report.mean_f1) std::cout << " mean_f1=" << format_percent(*report.mean_f1);
    std::cout << '\n';
  }
  return 0;
}

int cmd_extract(const std::string& patches_path, const std::string& images, std::size_t margin, const std::string& out_dir) {
  const auto specs = read_file(patches_path, [](std::istream& in) { return parse_patches(in); });
  const auto ids = patch_ids(specs);
  const auto loader = directory_loader(images);
  std::map<std::string, ImageBuffer> cache;
  for (std::size_t i = 0; i < specs.size(); ++i) {
    auto it = cache.find(specs[i].image_id);
    if (it == cache.end()) it = cache.emplace(specs[i].image_id, loader(specs[i].image_id)).first;
    ImageBuffer patch;
    try {
      patch = extract_patch(it->second, specs[i], margin);
    } catch (const Error& e) {
      throw FileError(patches_path, Error(e.kind(), e.detail(), i + 2));
    }
    write_file((fs::path(out_dir) / (ids[i] + ".ppm")).string(), [&](std::ostream& o) { write_ppm(o, patch); }, std::ios::binary);
  }
  std::cout << "extracted " << specs.size() << " patches margin=" << margin << '\n';
  return 0;
}

int cmd_augment(const std::string& input, const AugmentPolicy& policy, const std::string& out_dir) {
  const auto img = read_file(input, [](std::istream& in) { return load_ppm(in); }, std::ios::binary);
  const auto variants = augment(img, policy);
  const std::string stem = fs::path(input).stem().string();
  for (std::size_t k = 0; k < variants.size(); ++k) {
    char suffix[16];
    std::snprintf(suffix, sizeof suffix, "_%02zu.ppm", k);
    write_file((fs::path(out_dir) / (stem + suffix)).string(), [&](std::ostream& o) { write_ppm(o, variants[k]); }, std::ios::binary);
  }
  std::cout << "wrote " << variants.size() << " images seed=" << policy.seed << " factors="
            << text::join_reals(brightness_factors(policy)) << '\n';
  return 0;
}

struct FeaturizeArgs {
  std::string patches;
  std::string images;
  std::vector<std::string> inputs;
  std::size_t margin = 25;
  std::size_t bins = 16;
  bool no_normalize = false;
  std::string view_name;
  std::size_t jobs = 1;
  std::string out;
};

int cmd_featurize(const FeaturizeArgs& a) {
  FeatureMatrix m;
  if (!a.patches.empty()) {
    if (a.images.empty()) throw CLI::ValidationError("--images", "required with --patches");
    const auto specs = read_file(a.patches, [](std::istream& in) { return parse_patches(in); });
    std::vector<const PatchSpec*> ptrs;
    for (const auto& s : specs) ptrs.push_back(&s);
    m = featurize_patches(patch_ids(specs), ptrs, directory_loader(a.images), a.margin, a.bins, !a.no_normalize, a.jobs);
  } else {
    if (a.inputs.empty()) throw CLI::ValidationError("featurize", "give --patches/--images or PPM files");
    m = {"rgb_hist" + std::to_string(a.bins), {}, 3 * a.bins, {}};
    for (const auto& path : a.inputs) {
      const auto img = read_file(path, [](std::istream& in) { return load_ppm(in); }, std::ios::binary);
      const auto h = rgb_histogram(img, a.bins, !a.no_normalize);
      m.ids.push_back(fs::path(path).stem().string());
      m.values.insert(m.values.end(), h.begin(), h.end());
    }
    m.validate();
  }
  if (!a.view_name.empty()) m.view_name = a.view_name;
  write_file(a.out, [&](std::ostream& o) { write_fvec(o, m); });
  std::cerr << "featurized " << m.rows() << " samples dim=" << m.dim << '\n';
  return 0;
}

struct FdsiArgs {
  std::string patches;
  std::string test_patches;
  std::string images;
  std::string scores_file;
  std::string protocol = "all-train";
  std::string flips = "horizontal,vertical";
  FdsiConfig cfg;
  std::string format = "text";
  std::string out;
  std::string scores_out;
};

int cmd_run_fdsi(FdsiArgs a, const std::string& invocation) {
  a.cfg.protocol = parse_protocol(a.protocol);
  a.cfg.augment = parse_flips(a.flips, a.cfg.augment);
  a.cfg.augment.seed = a.cfg.seed;
  a.cfg.hp.seed = a.cfg.seed;
  const auto train = read_file(a.patches, [](std::istream& in) { return parse_patches(in); });
  std::optional<std::vector<PatchSpec>> test;
  if (!a.test_patches.empty()) test = read_file(a.test_patches, [](std::istream& in) { return parse_patches(in); });
  std::optional<ScoreMatrix> scores;
  if (!a.scores_file.empty()) scores = read_file(a.scores_file, [](std::istream& in) { return parse_scores(in); });
  if (a.images.empty() && !scores) throw CLI::ValidationError("--images", "required unless --scores-file is given");
  const ImageLoader loader = a.images.empty() ? ImageLoader([](const std::string& id) -> ImageBuffer {
    throw Error(ErrorKind::InvalidArgument, "no image directory for '" + id + "'");
  })
                                              : directory_loader(a.images);
  std::optional<std::span<const PatchSpec>> test_span;
  if (test) test_span = std::span<const PatchSpec>(*test);
  auto run = run_protocol(train, test_span, loader, a.cfg, scores ? &*scores : nullptr);
  run.report.set_meta("command", invocation);
  run.report.set_meta("patches", a.patches);
  if (!a.test_patches.empty()) run.report.set_meta("test_patches", a.test_patches);
  if (!a.scores_file.empty()) run.report.set_meta("scores_file", a.scores_file);
  const auto format = a.format == "json" ? ReportFormat::Json : ReportFormat::Text;
  write_file(a.out, [&](std::ostream& o) { o << render_report(run.report, format); });
  if (!a.scores_out.empty()) write_file(a.scores_out, [&](std::ostream& o) { write_scores(o, run.scores); });
  if (!a.out.empty() && a.out != "-") {
    std::cout << "protocol=" << to_string(a.cfg.protocol) << " f1_non_passable="
              << format_percent(run.report.f1_per_class.at(std::string(kNonPassable))) << " seed=" << a.cfg.seed << '\n';
  }
  return 0;
}

int cmd_synth(const std::string& kind, const std::string& out_dir, std::uint64_t seed, std::size_t count) {
  if (kind == "fcsm") {
    synthetic::BlobOptions opt;
    opt.seed = seed;
    if (count) opt.samples = count;
    const auto fx = synthetic::make_blobs(opt);
    for (const auto& v : fx.evidence.views) {
      write_file((fs::path(out_dir) / (v.view_name + ".fvec")).string(), [&](std::ostream& o) { write_fvec(o, v); });
    }
    write_file((fs::path(out_dir) / "evidence.labels").string(), [&](std::ostream& o) { write_labels(o, fx.evidence.label_table()); });
    write_file((fs::path(out_dir) / "passability.labels").string(), [&](std::ostream& o) { write_labels(o, fx.passability); });
    std::cout << "wrote fcsm fixture samples=" << fx.evidence.size() << " views=" << fx.evidence.views.size() << " seed=" << seed << '\n';
  } else if (kind == "fdsi") {
    synthetic::TextureOptions opt;
    opt.seed = seed;
    if (count) opt.per_class = count;
    const auto fx = synthetic::make_textures(opt);
    write_file((fs::path(out_dir) / "patches.tsv").string(), [&](std::ostream& o) { write_patches(o, fx.patches); });
    for (const auto& [id, img] : fx.images) {
      write_file((fs::path(out_dir) / "images" / (id + ".ppm")).string(), [&](std::ostream& o) { write_ppm(o, img); }, std::ios::binary);
    }
    std::cout << "wrote fdsi fixture patches=" << fx.patches.size() << " seed=" << seed << '\n';
  } else {
    throw CLI::ValidationError("--kind", "must be fcsm or fdsi");
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"floodpass: flood passability classification from multi-model features and satellite patches"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for every subcommand");

  std::vector<std::string> validate_paths;
  auto* validate = app.add_subcommand("validate", "Check FVEC/LABELS/SCORE/PATCHES/PRED/model/PPM files");
  validate->add_option("files", validate_paths, "Files to check")->required()->check(CLI::ExistingFile);

  SplitArgs split_args;
  auto* split = app.add_subcommand("split", "Stratified seeded train/test split of a labeled dataset");
  split->add_option("--features", split_args.features, "FVEC view files; the split covers their aligned ids")->check(CLI::ExistingFile);
  split->add_option("--labels", split_args.labels, "LABELS file")->required()->check(CLI::ExistingFile);
  split->add_option("--train-fraction", split_args.fraction, "Training fraction in (0,1)")->capture_default_str()->check(CLI::Range(0.0, 1.0));
  split->add_option("--seed", split_args.seed, "Shuffle seed")->capture_default_str();
  split->add_option("--out-dir", split_args.out_dir, "Directory for train.labels, test.labels, split.meta")->required();

  TrainArgs train_args;
  auto* train = app.add_subcommand("train", "Train a fusion model, or a two-stage cascade with --passability");
  train->add_option("--features", train_args.features, "FVEC view files (one per model)")->required()->check(CLI::ExistingFile);
  train->add_option("--labels", train_args.labels, "LABELS file (evidence/no_evidence for a cascade)")->required()->check(CLI::ExistingFile);
  train->add_option("--passability", train_args.passability, "LABELS file with passable/non_passable; trains a cascade")->check(CLI::ExistingFile);
  train->add_option("--strategy", train_args.strategy, "Fusion strategy")->capture_default_str()->check(CLI::IsMember({"early", "late", "double"}));
  train->add_option("--late-mode", train_args.late_mode, "Late fusion reduction")->capture_default_str()->check(CLI::IsMember({"mean", "vote"}));
  train->add_flag("--no-block-norm", train_args.no_block_norm, "Concatenate raw view features without per-block L2 normalization");
  train->add_option("--lambda", train_args.hp.lambda, "SVM L2 regularization weight")->capture_default_str()->check(CLI::PositiveNumber);
  train->add_option("--epochs", train_args.hp.epochs, "SVM epochs")->capture_default_str()->check(CLI::Range(1, 1 << 30));
  train->add_option("--seed", train_args.hp.seed, "Training seed")->capture_default_str();
  train->add_option("--threshold1", train_args.threshold1, "Stage-1 evidence threshold")->capture_default_str()->check(CLI::Range(0.0, 1.0));
  train->add_option("--threshold2", train_args.threshold2, "Stage-2 passable threshold")->capture_default_str()->check(CLI::Range(0.0, 1.0));
  train->add_option("--jobs", train_args.jobs, "Worker threads")->envname("FLOODPASS_JOBS")->capture_default_str()->check(CLI::PositiveNumber);
  train->add_option("--out", train_args.out, "Model output path")->required();

  std::string predict_model, predict_out;
  std::vector<std::string> predict_features;
  auto* predict = app.add_subcommand("predict", "Predict with a trained model (CASCADE -> PRED, FUSION -> SCORE)");
  predict->add_option("--model", predict_model, "Model file")->required()->check(CLI::ExistingFile);
  predict->add_option("--features", predict_features, "FVEC view files")->required()->check(CLI::ExistingFile);
  predict->add_option("--out", predict_out, "Output path (default stdout)");

  EvaluateArgs eval_args;
  auto* evaluate_cmd = app.add_subcommand("evaluate", "Score predictions against labels (REPORT v1, mean F1 for cascades)");
  evaluate_cmd->add_option("--pred", eval_args.pred, "PRED or SCORE file")->required()->check(CLI::ExistingFile);
  evaluate_cmd->add_option("--labels", eval_args.labels, "Truth LABELS file")->required()->check(CLI::ExistingFile);
  evaluate_cmd->add_option("--passability", eval_args.passability, "Passability truth for cascade predictions")->check(CLI::ExistingFile);
  evaluate_cmd->add_option("--format", eval_args.format, "Report format")->capture_default_str()->check(CLI::IsMember({"text", "json"}));
  evaluate_cmd->add_option("--out", eval_args.out, "Report path (default stdout)");

  std::string extract_patches_path, extract_images, extract_out;
  std::size_t extract_margin = 25;
  auto* extract = app.add_subcommand("extract-patches", "Crop road patches around their endpoints");
  extract->add_option("--patches", extract_patches_path, "PATCHES file")->required()->check(CLI::ExistingFile);
  extract->add_option("--images", extract_images, "Directory of <image_id>.ppm")->required()->check(CLI::ExistingDirectory);
  extract->add_option("--margin", extract_margin, "Pixels added around the endpoint bounding box")->capture_default_str();
  extract->add_option("--out-dir", extract_out, "Output directory")->required();

  std::string augment_input, augment_out, augment_flips = "horizontal,vertical";
  AugmentPolicy augment_policy;
  auto* augment_cmd = app.add_subcommand("augment", "Write flipped and brightness-scaled copies of a PPM patch");
  augment_cmd->add_option("--input", augment_input, "PPM patch")->required()->check(CLI::ExistingFile);
  augment_cmd->add_option("--flips", augment_flips, "Comma list of horizontal,vertical,both or none")->capture_default_str();
  augment_cmd->add_option("--brightness-samples", augment_policy.brightness_samples, "Brightness factors per geometric variant")->capture_default_str();
  augment_cmd->add_option("--brightness-lo", augment_policy.brightness_lo, "Lowest brightness factor")->capture_default_str();
  augment_cmd->add_option("--brightness-hi", augment_policy.brightness_hi, "Highest brightness factor")->capture_default_str();
  augment_cmd->add_option("--seed", augment_policy.seed, "Brightness seed")->capture_default_str();
  augment_cmd->add_option("--out-dir", augment_out, "Output directory")->required();

  FeaturizeArgs feat_args;
  auto* featurize = app.add_subcommand("featurize", "RGB histogram features (FVEC) for patches or PPM files");
  featurize->add_option("--patches", feat_args.patches, "PATCHES file")->check(CLI::ExistingFile);
  featurize->add_option("--images", feat_args.images, "Directory of <image_id>.ppm")->check(CLI::ExistingDirectory);
  featurize->add_option("inputs", feat_args.inputs, "PPM files (ids are file stems)")->check(CLI::ExistingFile);
  featurize->add_option("--margin", feat_args.margin, "Patch margin in pixels")->capture_default_str();
  featurize->add_option("--bins", feat_args.bins, "Histogram bins per channel (divides 256)")->capture_default_str();
  featurize->add_flag("--no-normalize", feat_args.no_normalize, "Emit raw counts instead of per-channel frequencies");
  featurize->add_option("--view-name", feat_args.view_name, "View name written to the FVEC header");
  featurize->add_option("--jobs", feat_args.jobs, "Worker threads")->envname("FLOODPASS_JOBS")->capture_default_str()->check(CLI::PositiveNumber);
  featurize->add_option("--out", feat_args.out, "FVEC output path (default stdout)");

  FdsiArgs fdsi;
  auto* run_fdsi = app.add_subcommand("run-fdsi", "Satellite road-patch pipeline under the all-train or half-train protocol");
  run_fdsi->add_option("--patches", fdsi.patches, "Training PATCHES file")->required()->check(CLI::ExistingFile);
  run_fdsi->add_option("--test-patches", fdsi.test_patches, "Evaluation PATCHES file (all-train)")->check(CLI::ExistingFile);
  run_fdsi->add_option("--images", fdsi.images, "Directory of <image_id>.ppm")->check(CLI::ExistingDirectory);
  run_fdsi->add_option("--scores-file", fdsi.scores_file, "SCORE file with external passable/non_passable probabilities")->check(CLI::ExistingFile);
  run_fdsi->add_option("--protocol", fdsi.protocol, "Evaluation protocol")->capture_default_str()->check(CLI::IsMember({"all-train", "half-train"}));
  run_fdsi->add_option("--margin", fdsi.cfg.margin, "Patch margin in pixels")->capture_default_str();
  run_fdsi->add_option("--bins", fdsi.cfg.bins, "Histogram bins per channel")->capture_default_str();
  run_fdsi->add_flag("--no-normalize", [&](std::int64_t) { fdsi.cfg.normalize_histogram = false; }, "Raw histogram counts");
  run_fdsi->add_option("--flips", fdsi.flips, "Comma list of horizontal,vertical,both or none")->capture_default_str();
  run_fdsi->add_option("--brightness-samples", fdsi.cfg.augment.brightness_samples, "Brightness factors per geometric variant")->capture_default_str();
  run_fdsi->add_option("--brightness-lo", fdsi.cfg.augment.brightness_lo, "Lowest brightness factor")->capture_default_str();
  run_fdsi->add_option("--brightness-hi", fdsi.cfg.augment.brightness_hi, "Highest brightness factor")->capture_default_str();
  run_fdsi->add_option("--lambda", fdsi.cfg.hp.lambda, "SVM L2 regularization weight")->capture_default_str()->check(CLI::PositiveNumber);
  run_fdsi->add_option("--epochs", fdsi.cfg.hp.epochs, "SVM epochs")->capture_default_str()->check(CLI::Range(1, 1 << 30));
  run_fdsi->add_option("--seed", fdsi.cfg.seed, "Seed for split, augmentation and training")->capture_default_str();
  run_fdsi->add_option("--jobs", fdsi.cfg.jobs, "Worker threads")->envname("FLOODPASS_JOBS")->capture_default_str()->check(CLI::PositiveNumber);
  run_fdsi->add_option("--format", fdsi.format, "Report format")->capture_default_str()->check(CLI::IsMember({"text", "json"}));
  run_fdsi->add_option("--out", fdsi.out, "Report path (default stdout)");
  run_fdsi->add_option("--scores-out", fdsi.scores_out, "SCORE file of evaluation-patch probabilities");

  std::string synth_kind, synth_out;
  std::uint64_t synth_seed = 0;
  std::size_t synth_count = 0;
  auto* synth = app.add_subcommand("synth", "Write a synthetic fixture (fcsm: 4-view blobs, fdsi: texture patches)");
  synth->add_option("--kind", synth_kind, "fcsm or fdsi")->required()->check(CLI::IsMember({"fcsm", "fdsi"}));
  synth->add_option("--out-dir", synth_out, "Output directory")->required();
  synth->add_option("--seed", synth_seed, "Generator seed")->capture_default_str();
  synth->add_option("--count", synth_count, "Samples (fcsm) or patches per class (fdsi); 0 keeps the default")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  const std::string invocation = describe_args(argc, argv);
  try {
    if (*validate) return cmd_validate(validate_paths);
    if (*split) return cmd_split(split_args);
    if (*train) return cmd_train(train_args, invocation);
    if (*predict) return cmd_predict(predict_model, predict_features, predict_out);
    if (*evaluate_cmd) return cmd_evaluate(eval_args, invocation);
    if (*extract) return cmd_extract(extract_patches_path, extract_images, extract_margin, extract_out);
    if (*augment_cmd) return cmd_augment(augment_input, parse_flips(augment_flips, augment_policy), augment_out);
    if (*featurize) return cmd_featurize(feat_args);
    if (*run_fdsi) return cmd_run_fdsi(fdsi, invocation);
    if (*synth) return cmd_synth(synth_kind, synth_out, synth_seed, synth_count);
  } catch (const CLI::ValidationError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 1;
  } catch (const FileError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 1;
}
