#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace scenfuse {

struct RoadNode {
    std::int64_t id = 0;
    double x = 0.0;  // east, planar
    double y = 0.0;  // north
};

struct RoadSegment {
    std::int64_t id = 0;
    std::int64_t node_a = 0;
    std::int64_t node_b = 0;
    // Optional interior shape points (excluding endpoints); empty = straight.
    std::vector<std::pair<double, double>> polyline;
};

class RoadGraph {
public:
    void add_node(RoadNode node);
    void add_segment(RoadSegment segment);

    const std::map<std::int64_t, RoadNode>& nodes() const { return nodes_; }
    const std::map<std::int64_t, RoadSegment>& segments() const { return segments_; }
    const RoadNode& node(std::int64_t id) const;
    const RoadSegment& segment(std::int64_t id) const;
    bool has_segment(std::int64_t id) const { return segments_.count(id) > 0; }

    int degree(std::int64_t node_id) const;
    const std::vector<std::int64_t>& incident_segments(std::int64_t node_id) const;
    std::int64_t other_node(std::int64_t segment_id, std::int64_t node_id) const;
    std::optional<std::int64_t> shared_node(std::int64_t seg_a, std::int64_t seg_b) const;

    // Compass heading (deg, [0,360)) of the segment leaving `node_id`, taken
    // from the first polyline point away from that endpoint.
    double heading_from(std::int64_t segment_id, std::int64_t node_id) const;

    static RoadGraph load(const std::string& nodes_path, const std::string& segments_path);
    void save(const std::string& nodes_path, const std::string& segments_path) const;

private:
    std::map<std::int64_t, RoadNode> nodes_;
    std::map<std::int64_t, RoadSegment> segments_;
    std::map<std::int64_t, std::vector<std::int64_t>> incidence_;
};

// Compass heading of the vector (dx east, dy north), degrees in [0, 360).
double compass_heading(double dx, double dy);

// Unsigned angle in [0, 180] between the inbound travel direction (toward
// `via` along seg_in) and the outbound travel direction (away from `via` along
// seg_out). 0 = straight continuation, 90 = perpendicular turn.
double segment_angle(const RoadGraph& graph, std::int64_t seg_in, std::int64_t seg_out, std::int64_t via);

}  // namespace scenfuse
