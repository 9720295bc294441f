#pragma once

#include <algorithm>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace thetasim {

enum class ElementKind { Source, BeamSplitter, Mirror, PhaseShifter, Obstacle, NonlinearCrystal, Detector };
enum class ObstacleCategory { Bomb, Opaque };

inline const char* to_string(ElementKind k) {
    switch (k) {
        case ElementKind::Source: return "source";
        case ElementKind::BeamSplitter: return "beamsplitter";
        case ElementKind::Mirror: return "mirror";
        case ElementKind::PhaseShifter: return "phase_shifter";
        case ElementKind::Obstacle: return "obstacle";
        case ElementKind::NonlinearCrystal: return "nonlinear_crystal";
        case ElementKind::Detector: return "detector";
    }
    return "?";
}

/// Optical element. Parameter fields are meaningful only for the matching kind.
struct Element {
    std::string id;
    ElementKind kind = ElementKind::Mirror;

    double reflectivity = 0.5;                             // BeamSplitter
    double phase = 0.0;                                    // PhaseShifter
    ObstacleCategory category = ObstacleCategory::Opaque;  // Obstacle
    bool usable = false;                                   // Obstacle: bomb with a fuse
    double transmittance = 1.0;                            // Obstacle
    std::string label;                                     // Detector

    bool is_bomb() const { return kind == ElementKind::Obstacle && category == ObstacleCategory::Bomb; }
};

/// Port arity table. BeamSplitter 2/2; NonlinearCrystal in0=pump, in1=idler
/// injection (optional), out0=signal, out1=idler; Detector terminal.
inline int input_arity(ElementKind k) {
    switch (k) {
        case ElementKind::Source: return 0;
        case ElementKind::BeamSplitter: return 2;
        case ElementKind::NonlinearCrystal: return 2;
        case ElementKind::Detector: return 1;
        default: return 1;
    }
}

inline int output_arity(ElementKind k) {
    switch (k) {
        case ElementKind::Source: return 1;
        case ElementKind::BeamSplitter: return 2;
        case ElementKind::NonlinearCrystal: return 2;
        case ElementKind::Detector: return 0;
        default: return 1;
    }
}

/// Timed link from an output port to an input port of another element.
struct PathSegment {
    std::string id;  // canonical "FROM.outN->TO.inM", unique per circuit
    int from_element = -1;
    int from_port = 0;
    int to_element = -1;
    int to_port = 0;
    double delay = 0.0;
};

enum class CircuitFault {
    CyclicGraph,
    DanglingPort,
    MultipleSources,
    UnreachableDetector,
    BadParameter,
    NoPath,
    AmbiguousPath,
    ParseError,
};

inline const char* to_string(CircuitFault f) {
    switch (f) {
        case CircuitFault::CyclicGraph: return "CyclicGraph";
        case CircuitFault::DanglingPort: return "DanglingPort";
        case CircuitFault::MultipleSources: return "MultipleSources";
        case CircuitFault::UnreachableDetector: return "UnreachableDetector";
        case CircuitFault::BadParameter: return "BadParameter";
        case CircuitFault::NoPath: return "NoPath";
        case CircuitFault::AmbiguousPath: return "AmbiguousPath";
        case CircuitFault::ParseError: return "ParseError";
    }
    return "?";
}

class CircuitError : public std::runtime_error {
public:
    CircuitError(CircuitFault fault, const std::string& msg)
        : std::runtime_error(std::string(to_string(fault)) + ": " + msg), fault_(fault) {}
    CircuitFault fault() const { return fault_; }

private:
    CircuitFault fault_;
};

/// Immutable experiment geometry: a DAG of elements joined by timed segments.
/// Construct through CircuitBuilder (or parse_circuit_json); instances are
/// validated once and safe to share across concurrent trial workers.
class Circuit {
public:
    const std::string& name() const { return name_; }
    const std::vector<Element>& elements() const { return elements_; }
    const std::vector<PathSegment>& segments() const { return segments_; }

    const Element& element(int idx) const { return elements_[static_cast<std::size_t>(idx)]; }
    const PathSegment& segment(int idx) const { return segments_[static_cast<std::size_t>(idx)]; }

    int element_index(const std::string& id) const {
        auto it = index_.find(id);
        return it == index_.end() ? -1 : it->second;
    }

    /// Segment leaving (element, out port), or -1 when the port is a dump.
    int segment_from(int element, int port) const { return out_seg_[static_cast<std::size_t>(element)][static_cast<std::size_t>(port)]; }
    /// Segment feeding (element, in port), or -1 when nothing is connected.
    int segment_into(int element, int port) const { return in_seg_[static_cast<std::size_t>(element)][static_cast<std::size_t>(port)]; }

    int source_index() const { return source_; }

    bool has_crystal() const { return has_crystal_; }

    std::vector<int> detector_indices() const {
        std::vector<int> out;
        for (std::size_t i = 0; i < elements_.size(); ++i)
            if (elements_[i].kind == ElementKind::Detector) out.push_back(static_cast<int>(i));
        return out;
    }

private:
    friend class CircuitBuilder;

    std::string name_;
    std::vector<Element> elements_;
    std::vector<PathSegment> segments_;
    std::map<std::string, int> index_;
    std::vector<std::vector<int>> in_seg_, out_seg_;
    int source_ = -1;
    bool has_crystal_ = false;
};

/// Output ports a wave entering `in_port` can leave through. The idler
/// injection port of a crystal only feeds the idler output.
inline std::vector<int> forward_ports(ElementKind kind, int in_port) {
    switch (kind) {
        case ElementKind::BeamSplitter: return {0, 1};
        case ElementKind::NonlinearCrystal: return in_port == 0 ? std::vector<int>{0, 1} : std::vector<int>{1};
        case ElementKind::Detector: return {};
        case ElementKind::Source: return {};
        default: return {0};
    }
}

class CircuitBuilder {
public:
    explicit CircuitBuilder(std::string name) { c_.name_ = std::move(name); }

    CircuitBuilder& source(const std::string& id) { return add(make(id, ElementKind::Source)); }

    CircuitBuilder& beamsplitter(const std::string& id, double reflectivity = 0.5) {
        Element e = make(id, ElementKind::BeamSplitter);
        e.reflectivity = reflectivity;
        return add(e);
    }

    CircuitBuilder& mirror(const std::string& id) { return add(make(id, ElementKind::Mirror)); }

    CircuitBuilder& phase_shifter(const std::string& id, double phase) {
        Element e = make(id, ElementKind::PhaseShifter);
        e.phase = phase;
        return add(e);
    }

    CircuitBuilder& obstacle(const std::string& id, ObstacleCategory cat, double transmittance, bool usable = false) {
        Element e = make(id, ElementKind::Obstacle);
        e.category = cat;
        e.transmittance = transmittance;
        e.usable = usable;
        return add(e);
    }

    CircuitBuilder& crystal(const std::string& id) { return add(make(id, ElementKind::NonlinearCrystal)); }

    CircuitBuilder& detector(const std::string& id, const std::string& label = "") {
        Element e = make(id, ElementKind::Detector);
        e.label = label.empty() ? id : label;
        return add(e);
    }

    CircuitBuilder& add(Element e) {
        pending_elements_.push_back(std::move(e));
        return *this;
    }

    /// Link "ELEM.outN" to "ELEM.inM" with a propagation delay.
    CircuitBuilder& connect(const std::string& from, const std::string& to, double delay) {
        pending_links_.push_back({from, to, delay});
        return *this;
    }

    /// Validates everything and returns the immutable circuit. Throws
    /// CircuitError with a specific fault for every malformed description.
    Circuit build();

private:
    struct Link {
        std::string from, to;
        double delay;
    };

    static Element make(const std::string& id, ElementKind kind) {
        Element e;
        e.id = id;
        e.kind = kind;
        return e;
    }

    Circuit c_;
    std::vector<Element> pending_elements_;
    std::vector<Link> pending_links_;
};

namespace detail {

struct PortRef {
    int element;
    int port;
    bool is_input;
};

/// Parses "ELEM.out0" / "ELEM.in1". Throws DanglingPort when the reference
/// does not resolve.
inline PortRef parse_port(const Circuit& c, const std::map<std::string, int>& index, const std::string& text) {
    const auto dot = text.rfind('.');
    if (dot == std::string::npos)
        throw CircuitError(CircuitFault::DanglingPort, "port reference '" + text + "' is missing '.'");
    const std::string elem_id = text.substr(0, dot);
    const std::string port_name = text.substr(dot + 1);
    auto it = index.find(elem_id);
    if (it == index.end())
        throw CircuitError(CircuitFault::DanglingPort, "port reference '" + text + "' names unknown element '" + elem_id + "'");
    const int elem = it->second;
    bool is_input;
    std::string digits;
    if (port_name.rfind("in", 0) == 0) {
        is_input = true;
        digits = port_name.substr(2);
    } else if (port_name.rfind("out", 0) == 0) {
        is_input = false;
        digits = port_name.substr(3);
    } else {
        throw CircuitError(CircuitFault::DanglingPort, "port '" + text + "' must be named inN or outN");
    }
    if (digits.empty() || digits.find_first_not_of("0123456789") != std::string::npos)
        throw CircuitError(CircuitFault::DanglingPort, "port '" + text + "' has a malformed index");
    const int port = std::stoi(digits);
    const ElementKind kind = c.elements()[static_cast<std::size_t>(elem)].kind;
    const int arity = is_input ? input_arity(kind) : output_arity(kind);
    if (port < 0 || port >= arity)
        throw CircuitError(CircuitFault::DanglingPort,
                           "port '" + text + "' out of range for " + std::string(to_string(kind)));
    return {elem, port, is_input};
}

}  // namespace detail

inline Circuit CircuitBuilder::build() {
    // Elements and parameter ranges.
    int sources = 0;
    for (auto& e : pending_elements_) {
        if (e.id.empty()) throw CircuitError(CircuitFault::BadParameter, "element with empty id");
        if (c_.index_.count(e.id))
            throw CircuitError(CircuitFault::BadParameter, "duplicate element id '" + e.id + "'");
        if (e.kind == ElementKind::BeamSplitter && !(e.reflectivity >= 0.0 && e.reflectivity <= 1.0))
            throw CircuitError(CircuitFault::BadParameter, "reflectivity of '" + e.id + "' outside [0,1]");
        if (e.kind == ElementKind::Obstacle && !(e.transmittance >= 0.0 && e.transmittance <= 1.0))
            throw CircuitError(CircuitFault::BadParameter, "transmittance of '" + e.id + "' outside [0,1]");
        if (e.kind == ElementKind::Source) ++sources;
        if (e.kind == ElementKind::NonlinearCrystal) c_.has_crystal_ = true;
        c_.index_[e.id] = static_cast<int>(c_.elements_.size());
        c_.elements_.push_back(e);
    }
    if (sources > 1) throw CircuitError(CircuitFault::MultipleSources, "circuit has more than one source");
    if (sources == 0) throw CircuitError(CircuitFault::BadParameter, "circuit has no source");

    c_.in_seg_.assign(c_.elements_.size(), {});
    c_.out_seg_.assign(c_.elements_.size(), {});
    for (std::size_t i = 0; i < c_.elements_.size(); ++i) {
        c_.in_seg_[i].assign(static_cast<std::size_t>(input_arity(c_.elements_[i].kind)), -1);
        c_.out_seg_[i].assign(static_cast<std::size_t>(output_arity(c_.elements_[i].kind)), -1);
        if (c_.elements_[i].kind == ElementKind::Source) c_.source_ = static_cast<int>(i);
    }

    // Segments: out -> in, every port attached at most once, delay >= 0.
    for (auto& link : pending_links_) {
        auto from = detail::parse_port(c_, c_.index_, link.from);
        auto to = detail::parse_port(c_, c_.index_, link.to);
        if (from.is_input)
            throw CircuitError(CircuitFault::DanglingPort, "segment must start at an output port, got '" + link.from + "'");
        if (!to.is_input)
            throw CircuitError(CircuitFault::DanglingPort, "segment must end at an input port, got '" + link.to + "'");
        if (!(link.delay >= 0.0))
            throw CircuitError(CircuitFault::BadParameter, "segment '" + link.from + "->" + link.to + "' has negative delay");
        if (c_.out_seg_[static_cast<std::size_t>(from.element)][static_cast<std::size_t>(from.port)] != -1)
            throw CircuitError(CircuitFault::DanglingPort, "output port '" + link.from + "' attached twice");
        if (c_.in_seg_[static_cast<std::size_t>(to.element)][static_cast<std::size_t>(to.port)] != -1)
            throw CircuitError(CircuitFault::DanglingPort, "input port '" + link.to + "' attached twice");

        PathSegment seg;
        seg.id = link.from + "->" + link.to;
        seg.from_element = from.element;
        seg.from_port = from.port;
        seg.to_element = to.element;
        seg.to_port = to.port;
        seg.delay = link.delay;
        const int idx = static_cast<int>(c_.segments_.size());
        c_.out_seg_[static_cast<std::size_t>(from.element)][static_cast<std::size_t>(from.port)] = idx;
        c_.in_seg_[static_cast<std::size_t>(to.element)][static_cast<std::size_t>(to.port)] = idx;
        c_.segments_.push_back(std::move(seg));
    }

    // Acyclicity over the element graph.
    const std::size_t n = c_.elements_.size();
    std::vector<int> state(n, 0);  // 0 unseen, 1 on stack, 2 done
    std::vector<std::pair<int, int>> stack;
    for (std::size_t root = 0; root < n; ++root) {
        if (state[root] != 0) continue;
        stack.push_back({static_cast<int>(root), 0});
        state[root] = 1;
        while (!stack.empty()) {
            auto& [node, edge] = stack.back();
            const auto& outs = c_.out_seg_[static_cast<std::size_t>(node)];
            if (edge >= static_cast<int>(outs.size())) {
                state[static_cast<std::size_t>(node)] = 2;
                stack.pop_back();
                continue;
            }
            const int seg = outs[static_cast<std::size_t>(edge++)];
            if (seg < 0) continue;
            const int next = c_.segments_[static_cast<std::size_t>(seg)].to_element;
            if (state[static_cast<std::size_t>(next)] == 1)
                throw CircuitError(CircuitFault::CyclicGraph,
                                   "cycle through segment '" + c_.segments_[static_cast<std::size_t>(seg)].id + "'");
            if (state[static_cast<std::size_t>(next)] == 0) {
                state[static_cast<std::size_t>(next)] = 1;
                stack.push_back({next, 0});
            }
        }
    }

    // Reachability from the source.
    std::vector<bool> reachable(n, false);
    std::vector<int> todo{c_.source_};
    reachable[static_cast<std::size_t>(c_.source_)] = true;
    while (!todo.empty()) {
        const int node = todo.back();
        todo.pop_back();
        for (int seg : c_.out_seg_[static_cast<std::size_t>(node)]) {
            if (seg < 0) continue;
            const int next = c_.segments_[static_cast<std::size_t>(seg)].to_element;
            if (!reachable[static_cast<std::size_t>(next)]) {
                reachable[static_cast<std::size_t>(next)] = true;
                todo.push_back(next);
            }
        }
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (reachable[i]) continue;
        if (c_.elements_[i].kind == ElementKind::Detector)
            throw CircuitError(CircuitFault::UnreachableDetector, "detector '" + c_.elements_[i].id + "' unreachable from source");
        throw CircuitError(CircuitFault::DanglingPort, "element '" + c_.elements_[i].id + "' not connected to the source");
    }

    return std::move(c_);
}

/// All source->detector path delays, one entry per distinct path, sorted.
/// Port semantics follow forward_ports (an idler injection only continues as
/// idler, so paths through a crystal's in1 never reach a signal detector).
inline std::vector<double> path_delays(const Circuit& c, const std::string& detector_id) {
    const int det = c.element_index(detector_id);
    if (det < 0 || c.element(det).kind != ElementKind::Detector)
        throw CircuitError(CircuitFault::NoPath, "no detector '" + detector_id + "'");

    std::vector<double> delays;
    // DFS over (element, reached-through-in-port) carrying accumulated delay.
    struct Frame {
        int element;
        int in_port;
        double acc;
    };
    std::vector<Frame> stack{{c.source_index(), 0, 0.0}};
    while (!stack.empty()) {
        Frame f = stack.back();
        stack.pop_back();
        if (f.element == det) {
            delays.push_back(f.acc);
            continue;
        }
        const ElementKind kind = c.element(f.element).kind;
        const auto ports = (kind == ElementKind::Source) ? std::vector<int>{0} : forward_ports(kind, f.in_port);
        for (int port : ports) {
            const int seg = c.segment_from(f.element, port);
            if (seg < 0) continue;
            const auto& s = c.segment(seg);
            stack.push_back({s.to_element, s.to_port, f.acc + s.delay});
        }
    }
    if (delays.empty()) throw CircuitError(CircuitFault::NoPath, "no path from source to '" + detector_id + "'");
    std::sort(delays.begin(), delays.end());
    return delays;
}

/// Single source->detector delay. When several paths exist they must agree;
/// otherwise AmbiguousPath (callers needing the full set use path_delays).
inline double total_delay(const Circuit& c, const std::string& detector_id) {
    const auto delays = path_delays(c, detector_id);
    for (double d : delays)
        if (d != delays.front())
            throw CircuitError(CircuitFault::AmbiguousPath,
                               "detector '" + detector_id + "' reachable with differing delays");
    return delays.front();
}

}  // namespace thetasim
