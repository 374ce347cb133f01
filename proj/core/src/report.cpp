#include "das/report.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <sstream>

#include "das/error.hpp"
#include "json.hpp"

namespace das {

using ordered_json = nlohmann::ordered_json;

std::string format_sig6(double value) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", value);
  return buf;
}

std::string atc_label(double threshold) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "ATC@%g", threshold);
  return buf;
}

std::vector<NamedSeries> metric_series(const ScoreReport& report) {
  std::vector<NamedSeries> out;
  const auto& cps = report.checkpoints;
  auto collect = [&](const std::string& name, auto getter) {
    NamedSeries s{name, {}};
    for (const auto& r : cps) {
      const std::optional<double> v = getter(r);
      if (!v) return;
      s.values.push_back(*v);
    }
    if (!s.values.empty()) out.push_back(std::move(s));
  };
  collect("FIS", [](const CheckpointScores& r) { return r.fis; });
  collect("PDR", [](const CheckpointScores& r) { return r.pdr; });
  collect("DAS", [](const CheckpointScores& r) { return r.das; });
  using Opt = std::optional<double>;
  collect("PS", [](const CheckpointScores& r) { return r.baselines ? Opt(r.baselines->ps) : Opt(); });
  collect("ES", [](const CheckpointScores& r) { return r.baselines ? Opt(r.baselines->es) : Opt(); });
  for (std::size_t t = 0; t < report.atc_thresholds.size(); ++t) {
    collect(atc_label(report.atc_thresholds[t]), [t](const CheckpointScores& r) {
      return r.baselines && t < r.baselines->atc.size() ? Opt(r.baselines->atc[t]) : Opt();
    });
  }
  collect("FD", [](const CheckpointScores& r) { return r.baselines ? r.baselines->fd : Opt(); });
  return out;
}

SelectionReport selection_report(const ScoreReport& report, std::span<const double> maps) {
  if (maps.size() != report.checkpoints.size()) {
    throw Error(ErrorCode::LengthMismatch, "mAP series has " + std::to_string(maps.size()) + " entries for " +
                                               std::to_string(report.checkpoints.size()) + " checkpoints");
  }
  SelectionReport out;
  if (report.selected_position) {
    std::vector<double> percent(maps.begin(), maps.end());
    for (double& m : percent) m *= 100.0;
    out.comparison = compare_selection(percent, *report.selected_position);
  }
  for (const auto& series : metric_series(report)) {
    MetricCorrelation c{series.name, std::nullopt, ""};
    try {
      c.pcc = pearson(series.values, maps).pcc;
    } catch (const Error& e) {
      c.note = std::string(to_string(e.code())) + ": " + e.message();
    }
    out.correlations.push_back(std::move(c));
  }
  return out;
}

namespace {

ordered_json num(double v) { return std::strtod(format_sig6(v).c_str(), nullptr); }

ordered_json opt_num(const std::optional<double>& v) { return v ? num(*v) : ordered_json(nullptr); }

}  // namespace

std::string to_json(const ScoreReport& report) {
  ordered_json doc;
  doc["schema"] = kReportSchema;
  doc["run_id"] = report.run_id;
  doc["lambda"] = num(report.lambda);
  doc["conf_thresh"] = num(report.conf_thresh);
  auto ths = ordered_json::array();
  for (double t : report.atc_thresholds) ths.push_back(num(t));
  doc["atc_thresholds"] = ths;

  auto rows = ordered_json::array();
  for (const auto& r : report.checkpoints) {
    ordered_json row;
    row["id"] = r.checkpoint_id;
    row["index"] = r.index;
    if (r.fis) {
      row["fis"] = opt_num(r.fis);
      row["pdr"] = opt_num(r.pdr);
      row["pdr_intra"] = opt_num(r.pdr_intra);
      row["pdr_inter"] = opt_num(r.pdr_inter);
      row["fis_normalized"] = opt_num(r.fis_normalized);
      row["pdr_normalized"] = opt_num(r.pdr_normalized);
      row["das"] = opt_num(r.das);
    }
    if (r.baselines) {
      ordered_json b;
      b["ps"] = num(r.baselines->ps);
      b["es"] = num(r.baselines->es);
      ordered_json atc;
      for (std::size_t t = 0; t < r.baselines->atc.size() && t < report.atc_thresholds.size(); ++t) {
        atc[format_sig6(report.atc_thresholds[t])] = num(r.baselines->atc[t]);
      }
      b["atc"] = atc;
      if (r.baselines->fd) {
        b["fd"] = num(*r.baselines->fd);
        b["fd_mode"] = r.baselines->fd_mode_used == FdMode::diagonal ? "diagonal" : "full";
      }
      row["baselines"] = std::move(b);
    }
    if (r.map) {
      row["map50"] = num(r.map->map);
      auto aps = ordered_json::array();
      for (const auto& ap : r.map->ap_per_class) aps.push_back(opt_num(ap));
      row["ap_per_class"] = std::move(aps);
    }
    rows.push_back(std::move(row));
  }
  doc["checkpoints"] = std::move(rows);
  doc["selected_checkpoint"] =
      report.selected_checkpoint_id ? ordered_json(*report.selected_checkpoint_id) : ordered_json(nullptr);
  doc["notes"] = report.notes;

  if (report.evaluation) {
    ordered_json ev;
    if (const auto& c = report.evaluation->comparison) {
      ordered_json cmp;
      cmp["last"] = num(c->last);
      cmp["ours"] = num(c->selected);
      cmp["improvement"] = format_improvement(c->improvement);
      cmp["oracle"] = num(c->oracle);
      cmp["selected_position"] = c->selected_index;
      cmp["oracle_position"] = c->oracle_index;
      ev["comparison"] = std::move(cmp);
    }
    auto corr = ordered_json::array();
    for (const auto& m : report.evaluation->correlations) {
      ordered_json node;
      node["metric"] = m.metric;
      node["pcc"] = opt_num(m.pcc);
      if (!m.note.empty()) node["note"] = m.note;
      corr.push_back(std::move(node));
    }
    ev["correlation"] = std::move(corr);
    doc["evaluation"] = std::move(ev);
  }
  return doc.dump(2) + "\n";
}

namespace {

std::string render_table(const std::vector<std::string>& header, const std::vector<std::vector<std::string>>& rows) {
  std::vector<std::size_t> width(header.size());
  for (std::size_t c = 0; c < header.size(); ++c) width[c] = header[c].size();
  for (const auto& r : rows) {
    for (std::size_t c = 0; c < r.size() && c < width.size(); ++c) width[c] = std::max(width[c], r[c].size());
  }
  std::ostringstream out;
  auto line = [&](const std::vector<std::string>& cells) {
    for (std::size_t c = 0; c < cells.size(); ++c) {
      if (c > 0) out << "  ";
      if (c == 0) {
        out << cells[c] << std::string(width[c] - cells[c].size(), ' ');
      } else {
        out << std::string(width[c] - cells[c].size(), ' ') << cells[c];
      }
    }
    out << '\n';
  };
  line(header);
  std::vector<std::string> rule;
  for (auto w : width) rule.emplace_back(w, '-');
  line(rule);
  for (const auto& r : rows) line(r);
  return out.str();
}

std::string cell(const std::optional<double>& v) { return v ? format_sig6(*v) : "-"; }

}  // namespace

std::string comparison_table(const SelectionReport& selection) {
  std::ostringstream out;
  if (selection.comparison) {
    const auto& c = *selection.comparison;
    out << render_table({"Last", "Ours", "Imp.", "Oracle"},
                        {{format_sig6(c.last), format_sig6(c.selected), format_improvement(c.improvement),
                          format_sig6(c.oracle)}});
  }
  if (!selection.correlations.empty()) {
    if (selection.comparison) out << '\n';
    std::vector<std::vector<std::string>> rows;
    for (const auto& m : selection.correlations) {
      rows.push_back({m.metric, m.pcc ? format_sig6(*m.pcc) : "undefined", m.note});
    }
    out << render_table({"Metric", "PCC", "Note"}, rows);
  }
  return out.str();
}

std::string to_table(const ScoreReport& report) {
  const auto& cps = report.checkpoints;
  const bool scores = !cps.empty() && cps.front().fis.has_value();
  const bool baselines = !cps.empty() && cps.front().baselines.has_value();
  const bool fd = baselines && std::any_of(cps.begin(), cps.end(), [](const CheckpointScores& r) {
                    return r.baselines && r.baselines->fd.has_value();
                  });
  const bool maps = !cps.empty() && cps.front().map.has_value();

  std::vector<std::string> header{"checkpoint", "index"};
  if (scores) header.insert(header.end(), {"FIS", "PDR", "FIS_norm", "PDR_norm", "DAS"});
  if (baselines) {
    header.insert(header.end(), {"PS", "ES"});
    for (double t : report.atc_thresholds) header.push_back(atc_label(t));
    if (fd) header.push_back("FD");
  }
  if (maps) header.push_back("mAP50");

  std::vector<std::vector<std::string>> rows;
  for (std::size_t i = 0; i < cps.size(); ++i) {
    const auto& r = cps[i];
    const bool selected = report.selected_position && *report.selected_position == i;
    std::vector<std::string> row{(selected ? "* " : "  ") + r.checkpoint_id, std::to_string(r.index)};
    if (scores) {
      for (const auto& v : {r.fis, r.pdr, r.fis_normalized, r.pdr_normalized, r.das}) row.push_back(cell(v));
    }
    if (baselines) {
      row.push_back(cell(r.baselines->ps));
      row.push_back(cell(r.baselines->es));
      for (std::size_t t = 0; t < report.atc_thresholds.size(); ++t) {
        row.push_back(t < r.baselines->atc.size() ? format_sig6(r.baselines->atc[t]) : "-");
      }
      if (fd) row.push_back(cell(r.baselines->fd));
    }
    if (maps) row.push_back(format_sig6(r.map->map));
    rows.push_back(std::move(row));
  }

  std::ostringstream out;
  out << "run " << report.run_id << "  lambda=" << format_sig6(report.lambda)
      << "  conf_thresh=" << format_sig6(report.conf_thresh) << '\n';
  out << render_table(header, rows);
  if (report.selected_checkpoint_id) out << "selected: " << *report.selected_checkpoint_id << '\n';
  for (const auto& n : report.notes) out << "note: " << n << '\n';
  if (report.evaluation) out << '\n' << comparison_table(*report.evaluation);
  return out.str();
}

}  // namespace das
