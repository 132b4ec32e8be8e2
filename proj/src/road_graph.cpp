#include "scenfuse/road_graph.hpp"

#include <cmath>
#include <sstream>

#include "scenfuse/angles.hpp"
#include "scenfuse/common.hpp"
#include "scenfuse/csv.hpp"
#include "scenfuse/numfmt.hpp"

namespace scenfuse {

void RoadGraph::add_node(RoadNode node) {
    auto id = node.id;
    if (!nodes_.emplace(id, std::move(node)).second) {
        fail_validation("DuplicateNode", "node " + std::to_string(id) + " declared twice");
    }
    incidence_.emplace(id, std::vector<std::int64_t>{});
}

void RoadGraph::add_segment(RoadSegment segment) {
    if (!nodes_.count(segment.node_a) || !nodes_.count(segment.node_b)) {
        fail_validation("DanglingSegment", "segment " + std::to_string(segment.id) +
                                               " references a missing node");
    }
    auto id = segment.id;
    auto a = segment.node_a;
    auto b = segment.node_b;
    if (!segments_.emplace(id, std::move(segment)).second) {
        fail_validation("DuplicateSegment", "segment " + std::to_string(id) + " declared twice");
    }
    incidence_[a].push_back(id);
    incidence_[b].push_back(id);
}

const RoadNode& RoadGraph::node(std::int64_t id) const {
    auto it = nodes_.find(id);
    if (it == nodes_.end()) fail_validation("UnknownNode", "node " + std::to_string(id) + " not in graph");
    return it->second;
}

const RoadSegment& RoadGraph::segment(std::int64_t id) const {
    auto it = segments_.find(id);
    if (it == segments_.end()) {
        fail_validation("UnknownSegment", "segment " + std::to_string(id) + " not in graph");
    }
    return it->second;
}

int RoadGraph::degree(std::int64_t node_id) const {
    auto it = incidence_.find(node_id);
    return it == incidence_.end() ? 0 : static_cast<int>(it->second.size());
}

const std::vector<std::int64_t>& RoadGraph::incident_segments(std::int64_t node_id) const {
    static const std::vector<std::int64_t> empty;
    auto it = incidence_.find(node_id);
    return it == incidence_.end() ? empty : it->second;
}

std::int64_t RoadGraph::other_node(std::int64_t segment_id, std::int64_t node_id) const {
    const RoadSegment& seg = segment(segment_id);
    if (seg.node_a == node_id) return seg.node_b;
    if (seg.node_b == node_id) return seg.node_a;
    fail_validation("NotIncident", "segment " + std::to_string(segment_id) + " not incident to node " +
                                       std::to_string(node_id));
}

std::optional<std::int64_t> RoadGraph::shared_node(std::int64_t seg_a, std::int64_t seg_b) const {
    const RoadSegment& a = segment(seg_a);
    const RoadSegment& b = segment(seg_b);
    if (a.node_a == b.node_a || a.node_a == b.node_b) return a.node_a;
    if (a.node_b == b.node_a || a.node_b == b.node_b) return a.node_b;
    return std::nullopt;
}

double compass_heading(double dx, double dy) {
    return normalize_compass(std::atan2(dx, dy) * 180.0 / kPi);
}

double RoadGraph::heading_from(std::int64_t segment_id, std::int64_t node_id) const {
    const RoadSegment& seg = segment(segment_id);
    const RoadNode& from = node(node_id);
    double to_x;
    double to_y;
    if (seg.node_a == node_id) {
        if (!seg.polyline.empty()) {
            to_x = seg.polyline.front().first;
            to_y = seg.polyline.front().second;
        } else {
            to_x = node(seg.node_b).x;
            to_y = node(seg.node_b).y;
        }
    } else if (seg.node_b == node_id) {
        if (!seg.polyline.empty()) {
            to_x = seg.polyline.back().first;
            to_y = seg.polyline.back().second;
        } else {
            to_x = node(seg.node_a).x;
            to_y = node(seg.node_a).y;
        }
    } else {
        fail_validation("NotIncident", "segment " + std::to_string(segment_id) + " not incident to node " +
                                           std::to_string(node_id));
    }
    return compass_heading(to_x - from.x, to_y - from.y);
}

double segment_angle(const RoadGraph& graph, std::int64_t seg_in, std::int64_t seg_out, std::int64_t via) {
    const RoadSegment& in_seg = graph.segment(seg_in);
    const RoadSegment& out_seg = graph.segment(seg_out);
    if (in_seg.node_a != via && in_seg.node_b != via) {
        fail_validation("NotIncident", "inbound segment " + std::to_string(seg_in) +
                                           " not incident to node " + std::to_string(via));
    }
    if (out_seg.node_a != via && out_seg.node_b != via) {
        fail_validation("NotIncident", "outbound segment " + std::to_string(seg_out) +
                                           " not incident to node " + std::to_string(via));
    }
    // Inbound travel direction = reverse of the segment's away-from-via
    // direction; outbound travel direction = away from via.
    double inbound = graph.heading_from(seg_in, via) + 180.0;
    double outbound = graph.heading_from(seg_out, via);
    return std::abs(wrap_degrees(outbound - inbound));
}

RoadGraph RoadGraph::load(const std::string& nodes_path, const std::string& segments_path) {
    RoadGraph graph;
    CsvTable nodes = read_csv_file(nodes_path);
    size_t n_id = nodes.require_column("node_id");
    size_t n_x = nodes.require_column("x");
    size_t n_y = nodes.require_column("y");
    for (const auto& row : nodes.rows) {
        RoadNode node;
        node.id = require_int(row[n_id], "node_id");
        node.x = require_double(row[n_x], "x");
        node.y = require_double(row[n_y], "y");
        graph.add_node(node);
    }

    CsvTable segs = read_csv_file(segments_path);
    size_t s_id = segs.require_column("segment_id");
    size_t s_a = segs.require_column("node_a");
    size_t s_b = segs.require_column("node_b");
    size_t s_poly = segs.column("polyline");
    for (const auto& row : segs.rows) {
        RoadSegment seg;
        seg.id = require_int(row[s_id], "segment_id");
        seg.node_a = require_int(row[s_a], "node_a");
        seg.node_b = require_int(row[s_b], "node_b");
        if (s_poly != CsvTable::npos && !trim(row[s_poly]).empty()) {
            // "x1 y1;x2 y2;..." interior shape points
            std::istringstream stream{row[s_poly]};
            std::string point;
            while (std::getline(stream, point, ';')) {
                std::istringstream coords(point);
                double x = 0.0;
                double y = 0.0;
                if (!(coords >> x >> y)) {
                    fail_parse("TypeMismatch", segments_path + ": bad polyline point '" + point + "'");
                }
                seg.polyline.emplace_back(x, y);
            }
        }
        graph.add_segment(std::move(seg));
    }
    return graph;
}

void RoadGraph::save(const std::string& nodes_path, const std::string& segments_path) const {
    CsvTable nodes;
    nodes.header = {"node_id", "x", "y"};
    for (const auto& [id, node] : nodes_) {
        nodes.rows.push_back({std::to_string(id), format_double(node.x), format_double(node.y)});
    }
    write_csv_file(nodes_path, nodes);

    CsvTable segs;
    segs.header = {"segment_id", "node_a", "node_b", "polyline"};
    for (const auto& [id, seg] : segments_) {
        std::string poly;
        for (size_t i = 0; i < seg.polyline.size(); ++i) {
            if (i) poly.push_back(';');
            poly += format_double(seg.polyline[i].first) + " " + format_double(seg.polyline[i].second);
        }
        segs.rows.push_back({std::to_string(id), std::to_string(seg.node_a), std::to_string(seg.node_b),
                             std::move(poly)});
    }
    write_csv_file(segments_path, segs);
}

}  // namespace scenfuse
