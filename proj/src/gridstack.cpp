#include "snowpipe/gridstack.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <set>

#include <json.hpp>

#include "snowpipe/error.hpp"

namespace snowpipe {

namespace fs = std::filesystem;
using nlohmann::json;

std::size_t Grid::valid_count() const
{
    return static_cast<std::size_t>(
        std::count_if(values.begin(), values.end(), [](float v) { return !std::isnan(v); }));
}

std::vector<const Grid*> SceneStack::all_grids() const
{
    std::vector<const Grid*> grids;
    grids.reserve(acquisitions.size() * 3 + 6);
    for (const auto& acq : acquisitions) {
        grids.push_back(&acq.phase);
        grids.push_back(&acq.coherence);
        grids.push_back(&acq.amplitude);
    }
    for (const Grid* g : {&incidence, &slope, &aspect, &elevation, &veg_height, &target}) {
        grids.push_back(g);
    }
    return grids;
}

void validate_stack(const SceneStack& stack)
{
    if (stack.acquisitions.size() != kAcquisitionCount) {
        throw Error(ErrorCode::BadAcquisitionCount,
                    "expected 12 acquisitions, got " + std::to_string(stack.acquisitions.size()));
    }
    const Grid& ref = stack.target;
    for (const Grid* g : stack.all_grids()) {
        if (!g->same_shape(ref) || g->values.size() != static_cast<std::size_t>(g->width) * g->height) {
            throw Error(ErrorCode::DimensionMismatch,
                        "grid is " + std::to_string(g->width) + "x" + std::to_string(g->height) +
                            ", stack is " + std::to_string(ref.width) + "x" + std::to_string(ref.height));
        }
    }
    for (const auto& acq : stack.acquisitions) {
        for (float c : acq.coherence.values) {
            if (!std::isnan(c) && (c < 0.0f || c > 1.0f)) {
                throw Error(ErrorCode::ValueOutOfRange, "coherence outside [0, 1] in acquisition " +
                                                            std::to_string(acq.index));
            }
        }
    }
    for (float d : stack.target.values) {
        if (!std::isnan(d) && d < 0.0f) {
            throw Error(ErrorCode::ValueOutOfRange, "negative target snow depth");
        }
    }
}

PixelMask valid_mask(const SceneStack& stack)
{
    const std::size_t n = stack.target.size();
    std::vector<unsigned char> ok(n, 1);
    for (const Grid* g : stack.all_grids()) {
        for (std::size_t i = 0; i < n; ++i) {
            if (std::isnan(g->values[i])) {
                ok[i] = 0;
            }
        }
    }
    PixelMask mask;
    for (std::size_t i = 0; i < n; ++i) {
        if (ok[i]) {
            mask.indices.push_back(i);
        }
    }
    return mask;
}

namespace {

std::uint32_t to_little(std::uint32_t bits)
{
    if constexpr (std::endian::native == std::endian::big) {
        return ((bits & 0xFFu) << 24) | ((bits & 0xFF00u) << 8) | ((bits >> 8) & 0xFF00u) | (bits >> 24);
    }
    return bits;
}

} // namespace

void save_grid(const Grid& grid, const fs::path& path)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw Error(ErrorCode::IoError, "cannot open " + path.string() + " for writing");
    }
    std::vector<std::uint32_t> raw(grid.values.size());
    for (std::size_t i = 0; i < raw.size(); ++i) {
        raw[i] = to_little(std::bit_cast<std::uint32_t>(grid.values[i]));
    }
    out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size() * 4));
    if (!out) {
        throw Error(ErrorCode::IoError, "short write to " + path.string());
    }
}

Grid load_grid(const fs::path& path, std::uint32_t width, std::uint32_t height)
{
    if (!fs::exists(path)) {
        throw Error(ErrorCode::MissingFile, path.string());
    }
    const std::size_t expected = static_cast<std::size_t>(width) * height * 4;
    std::error_code ec;
    const auto actual = fs::file_size(path, ec);
    if (ec) {
        throw Error(ErrorCode::IoError, "cannot stat " + path.string());
    }
    if (actual != expected) {
        throw Error(ErrorCode::LengthMismatch, path.string() + " has " + std::to_string(actual) +
                                                   " bytes, expected " + std::to_string(expected));
    }
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(ErrorCode::IoError, "cannot open " + path.string());
    }
    std::vector<std::uint32_t> raw(static_cast<std::size_t>(width) * height);
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(expected));
    if (!in) {
        throw Error(ErrorCode::IoError, "short read from " + path.string());
    }
    Grid grid(width, height);
    for (std::size_t i = 0; i < raw.size(); ++i) {
        grid.values[i] = std::bit_cast<float>(to_little(raw[i]));
    }
    return grid;
}

namespace {

const std::set<std::string> kTopKeys = {"width", "height", "pixel_spacing_m", "acquisitions", "ancillary", "target"};
const std::set<std::string> kAcqKeys = {"date", "phase", "coherence", "amplitude"};
const std::array<const char*, 5> kAncillaryKeys = {"incidence", "slope", "aspect", "elevation", "veg_height"};

void reject_unknown(const json& obj, const std::set<std::string>& allowed, const std::string& where)
{
    for (const auto& item : obj.items()) {
        if (!allowed.count(item.key())) {
            throw Error(ErrorCode::SchemaError, "unknown field '" + item.key() + "' in " + where);
        }
    }
    for (const auto& key : allowed) {
        if (!obj.contains(key)) {
            throw Error(ErrorCode::SchemaError, "missing field '" + key + "' in " + where);
        }
    }
}

std::string path_field(const json& obj, const char* key, const std::string& where)
{
    const auto& v = obj.at(key);
    if (!v.is_string()) {
        throw Error(ErrorCode::SchemaError, std::string(key) + " in " + where + " must be a string path");
    }
    return v.get<std::string>();
}

// Grids may disagree with the manifest dimensions; a file whose size does not
// match is reported as a co-registration failure, not as a corrupt file.
Grid load_member(const fs::path& base, const std::string& rel, std::uint32_t w, std::uint32_t h)
{
    const fs::path p = base / rel;
    try {
        return load_grid(p, w, h);
    } catch (const Error& e) {
        if (e.code() == ErrorCode::LengthMismatch) {
            throw Error(ErrorCode::DimensionMismatch, std::string(e.what()));
        }
        throw;
    }
}

} // namespace

SceneStack load_stack(const fs::path& manifest_path)
{
    if (!fs::exists(manifest_path)) {
        throw Error(ErrorCode::MissingFile, manifest_path.string());
    }
    std::ifstream in(manifest_path);
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw Error(ErrorCode::SchemaError, std::string("manifest is not valid JSON: ") + e.what());
    }
    if (!doc.is_object()) {
        throw Error(ErrorCode::SchemaError, "manifest root must be an object");
    }
    reject_unknown(doc, kTopKeys, "manifest");

    if (!doc["width"].is_number_unsigned() || !doc["height"].is_number_unsigned() ||
        !doc["pixel_spacing_m"].is_number()) {
        throw Error(ErrorCode::SchemaError, "width/height must be non-negative integers, pixel_spacing_m a number");
    }
    const auto w = doc["width"].get<std::uint32_t>();
    const auto h = doc["height"].get<std::uint32_t>();
    if (w == 0 || h == 0) {
        throw Error(ErrorCode::SchemaError, "width and height must be positive");
    }
    const fs::path base = manifest_path.parent_path();

    const auto& acqs = doc["acquisitions"];
    if (!acqs.is_array()) {
        throw Error(ErrorCode::SchemaError, "acquisitions must be an array");
    }
    if (acqs.size() != kAcquisitionCount) {
        throw Error(ErrorCode::BadAcquisitionCount,
                    "manifest lists " + std::to_string(acqs.size()) + " acquisitions, expected 12");
    }
    const auto& anc = doc["ancillary"];
    if (!anc.is_object()) {
        throw Error(ErrorCode::SchemaError, "ancillary must be an object");
    }
    reject_unknown(anc, std::set<std::string>(kAncillaryKeys.begin(), kAncillaryKeys.end()), "ancillary");

    SceneStack stack;
    stack.pixel_spacing_m = doc["pixel_spacing_m"].get<double>();
    for (std::size_t k = 0; k < acqs.size(); ++k) {
        const auto& a = acqs[k];
        const std::string where = "acquisitions[" + std::to_string(k) + "]";
        if (!a.is_object()) {
            throw Error(ErrorCode::SchemaError, where + " must be an object");
        }
        reject_unknown(a, kAcqKeys, where);
        Acquisition acq;
        acq.index = k;
        acq.date_label = path_field(a, "date", where);
        acq.phase = load_member(base, path_field(a, "phase", where), w, h);
        acq.coherence = load_member(base, path_field(a, "coherence", where), w, h);
        acq.amplitude = load_member(base, path_field(a, "amplitude", where), w, h);
        stack.acquisitions.push_back(std::move(acq));
    }
    stack.incidence = load_member(base, path_field(anc, "incidence", "ancillary"), w, h);
    stack.slope = load_member(base, path_field(anc, "slope", "ancillary"), w, h);
    stack.aspect = load_member(base, path_field(anc, "aspect", "ancillary"), w, h);
    stack.elevation = load_member(base, path_field(anc, "elevation", "ancillary"), w, h);
    stack.veg_height = load_member(base, path_field(anc, "veg_height", "ancillary"), w, h);
    if (!doc["target"].is_string()) {
        throw Error(ErrorCode::SchemaError, "target must be a string path");
    }
    stack.target = load_member(base, doc["target"].get<std::string>(), w, h);

    validate_stack(stack);
    return stack;
}

void save_stack(const SceneStack& stack, const fs::path& directory)
{
    validate_stack(stack);
    std::error_code ec;
    fs::create_directories(directory, ec);
    if (ec) {
        throw Error(ErrorCode::IoError, "cannot create " + directory.string());
    }

    json doc;
    doc["width"] = stack.width();
    doc["height"] = stack.height();
    doc["pixel_spacing_m"] = stack.pixel_spacing_m;
    json acqs = json::array();
    for (const auto& acq : stack.acquisitions) {
        char tag[16];
        std::snprintf(tag, sizeof tag, "t%02zu", acq.index);
        const std::string phase = std::string("phase_") + tag + ".f32";
        const std::string coh = std::string("coherence_") + tag + ".f32";
        const std::string amp = std::string("amplitude_") + tag + ".f32";
        save_grid(acq.phase, directory / phase);
        save_grid(acq.coherence, directory / coh);
        save_grid(acq.amplitude, directory / amp);
        acqs.push_back({{"date", acq.date_label}, {"phase", phase}, {"coherence", coh}, {"amplitude", amp}});
    }
    doc["acquisitions"] = std::move(acqs);

    const std::array<const Grid*, 5> ancillary = {&stack.incidence, &stack.slope, &stack.aspect,
                                                  &stack.elevation, &stack.veg_height};
    json anc = json::object();
    for (std::size_t i = 0; i < ancillary.size(); ++i) {
        const std::string file = std::string(kAncillaryKeys[i]) + ".f32";
        save_grid(*ancillary[i], directory / file);
        anc[kAncillaryKeys[i]] = file;
    }
    doc["ancillary"] = std::move(anc);
    save_grid(stack.target, directory / "target.f32");
    doc["target"] = "target.f32";

    std::ofstream out(directory / "stack.json", std::ios::trunc);
    if (!out) {
        throw Error(ErrorCode::IoError, "cannot write stack.json in " + directory.string());
    }
    out << doc.dump(2) << '\n';
}

} // namespace snowpipe
