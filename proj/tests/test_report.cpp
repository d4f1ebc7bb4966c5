#include <catch2/catch_amalgamated.hpp>

#include <json.hpp>

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "capstruct/config.hpp"
#include "capstruct/report.hpp"

using namespace capstruct;
using Catch::Approx;

namespace {

const std::string kFixtures = FIXTURE_DIR;

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

ingest::Dataset demo_dataset() {
    ingest::Dataset data;
    for (const char* f : {"demo_bank.csv", "pecking_two.csv", "peak_first.csv"}) {
        auto panel = ingest::parse_panel_csv(read_file(kFixtures + "/" + std::string(f)));
        data.panels.emplace(panel.firm_id, std::move(panel));
    }
    auto prices = ingest::parse_price_csv(read_file(kFixtures + "/demo_bank_prices.csv"), "DEMO");
    data.prices.emplace("DEMO", std::move(prices));
    return data;
}

report::FirmAnalysis demo_analysis() {
    const auto panel = ingest::parse_panel_csv(read_file(kFixtures + "/demo_bank.csv"));
    const auto prices =
        ingest::parse_price_csv(read_file(kFixtures + "/demo_bank_prices.csv"), "DEMO");
    return report::analyze_firm(panel, &prices, {});
}

}  // namespace

TEST_CASE("format names parse case-insensitively by alias") {
    CHECK(report::parse_format("markdown") == report::Format::Markdown);
    CHECK(report::parse_format("md") == report::Format::Markdown);
    CHECK(report::parse_format("csv") == report::Format::Csv);
    CHECK(report::parse_format("structured") == report::Format::Structured);
    CHECK(report::parse_format("json") == report::Format::Structured);
    CHECK_THROWS_AS(report::parse_format("pdf"), report::UnsupportedFormat);
    CHECK(std::string(report::file_extension(report::Format::Markdown)) == "md");
    CHECK(std::string(report::file_extension(report::Format::Csv)) == "csv");
    CHECK(std::string(report::file_extension(report::Format::Structured)) == "json");
}

TEST_CASE("full firm analysis populates every stage for the demo panel") {
    const auto a = demo_analysis();
    CHECK(a.validation.ok());
    REQUIRE(a.derived.has_value());
    CHECK(a.derive_failure.empty());
    REQUIRE(a.battery.has_value());
    CHECK(a.battery->outcomes.size() == 8);
    REQUIRE(a.pecking.has_value());
    CHECK(a.pecking->years_followed == 7);
    CHECK(a.pecking->n_usable == 11);
    REQUIRE(a.peak.has_value());
    CHECK(a.peak->peak_year == 2020);
    CHECK(a.verdicts.size() == 6);
    CHECK(a.ratio_screen.size() == 8);
    CHECK(a.quant_screen.size() == 4);
    CHECK(a.has_prices);
    CHECK(a.moving_average.size() == 21);
    REQUIRE(a.rsi.has_value());
    CHECK(a.rsi->points.size() == 206);
    REQUIRE(a.correlations.has_value());
    CHECK(a.correlations->names.size() == 14);
    REQUIRE(a.descriptives.size() == 14);
    for (const auto& d : a.descriptives) CHECK(d.has_value());
}

TEST_CASE("analysis halts at derivation when validation fails") {
    ingest::FirmPanel panel;
    panel.firm_id = "BAD";
    ingest::AnnualRecord r;
    r.fiscal_year = 2015;
    r.total_assets = -1;  // validation error
    panel.records.push_back(r);
    const auto a = report::analyze_firm(panel, nullptr, {});
    CHECK_FALSE(a.validation.ok());
    CHECK_FALSE(a.derived.has_value());
    CHECK(a.derive_failure == "panel failed validation");
    CHECK_FALSE(a.battery.has_value());
    // screens still ran on the raw panel
    CHECK(a.ratio_screen.size() == 8);

    // and the bundle still renders in every format
    report::ReportBundle bundle;
    bundle.firms.push_back(a);
    CHECK_NOTHROW(report::render_report(bundle, report::Format::Markdown));
    CHECK_NOTHROW(report::render_report(bundle, report::Format::Csv));
    CHECK_NOTHROW(report::render_report(bundle, report::Format::Structured));
    const auto md = report::render_report(bundle, report::Format::Markdown);
    CHECK(md.find("Derived analysis unavailable: panel failed validation") != std::string::npos);
}

TEST_CASE("dataset analysis orders firms alphabetically and matches prices by id") {
    const auto bundle = report::analyze_dataset(demo_dataset());
    REQUIRE(bundle.firms.size() == 3);
    CHECK(bundle.firms[0].panel.firm_id == "DEMO");
    CHECK(bundle.firms[1].panel.firm_id == "PCK2");
    CHECK(bundle.firms[2].panel.firm_id == "PKF");
    CHECK(bundle.firms[0].has_prices);
    CHECK_FALSE(bundle.firms[1].has_prices);
    CHECK_FALSE(bundle.firms[2].has_prices);
}

TEST_CASE("markdown report carries the headline tables and frozen values") {
    const auto bundle = report::analyze_dataset(demo_dataset());
    const auto md = report::render_report(bundle, report::Format::Markdown);

    CHECK(md.rfind("# Capital structure diagnostics", 0) == 0);
    CHECK(md.find("Firms analyzed: 3") != std::string::npos);
    CHECK(md.find("## Theory adherence") != std::string::npos);
    CHECK(md.find("## Market value peaks and financing order") != std::string::npos);
    CHECK(md.find("## Regression and rank correlation summary") != std::string::npos);
    CHECK(md.find("## Methods notes") != std::string::npos);
    CHECK(md.find("## Firm DEMO") != std::string::npos);
    CHECK(md.find("## Firm PCK2") != std::string::npos);

    // frozen hypothesis numbers in 6-decimal table style, stars appended
    CHECK(md.find("0.855287") != std::string::npos);   // H12 R^2
    CHECK(md.find("0.000017***") != std::string::npos);  // H12 p-value cell
    CHECK(md.find("0.027327**") != std::string::npos);   // H14 p-value cell
    CHECK(md.find("*** p<0.01, ** p<0.05, * p<0.1") != std::string::npos);

    // peak rows: DEMO interior peak, PKF first-year peak with --- lag cells
    CHECK(md.find("| 2020 | 171000.000000 | 1.312500 | 2019 | 1.311111 |") != std::string::npos);
    CHECK(md.find("| --- | --- |") != std::string::npos);
    CHECK(md.find("RRE > RTD > REQ in 7 of 11 years") != std::string::npos);
    CHECK(md.find("RRE > RTD > REQ in 2 of 11 years") != std::string::npos);

    // screening and indicators
    CHECK(md.find("manual assessment required") != std::string::npos);
    CHECK(md.find("Debt to equity ratio") != std::string::npos);

    // every theory verdict shows up in the adherence grid
    CHECK(md.find("Net Operating Income") != std::string::npos);
    CHECK(md.find("Partially Followed") != std::string::npos);
}

TEST_CASE("markdown derived table marks missing cells") {
    report::ReportBundle bundle;
    bundle.firms.push_back(demo_analysis());
    const auto md = report::render_report(bundle, report::Format::Markdown);
    // The first ETFR cells are undefined; the table renders them as n/a.
    CHECK(md.find("n/a") != std::string::npos);
}

TEST_CASE("csv report contains every section with parseable tables") {
    const auto bundle = report::analyze_dataset(demo_dataset());
    const auto csv = report::render_report(bundle, report::Format::Csv);

    for (const char* section :
         {"derived_series", "validation", "descriptives", "hypothesis_tests", "pooled_fits",
          "peak_and_financing_order", "rank_correlations", "screening", "technical_indicators",
          "theory_adherence", "verdict_evidence"}) {
        INFO(section);
        CHECK(csv.find(std::string("# table: ") + section) != std::string::npos);
    }

    // full-precision values re-parse exactly
    CHECK(csv.find("DEMO,2011,MVF,95000") != std::string::npos);
    std::istringstream lines(csv);
    std::string line;
    bool found_h12 = false;
    while (std::getline(lines, line)) {
        if (line.rfind("DEMO,H12,", 0) == 0) {
            found_h12 = true;
            // firm,hypothesis,dependent,regressors,r_squared,p_value,...
            std::vector<std::string> cells;
            std::istringstream row(line);
            std::string cell;
            while (std::getline(row, cell, ',')) cells.push_back(cell);
            REQUIRE(cells.size() >= 6);
            CHECK(std::stod(cells[4]) == Approx(0.855286550100432).epsilon(1e-14));
            CHECK(std::stod(cells[5]) == Approx(1.66585087847701e-05).epsilon(1e-10));
        }
    }
    CHECK(found_h12);
}

TEST_CASE("csv cells with embedded delimiters are quoted") {
    CHECK(report::detail::csv_escape("plain") == "plain");
    CHECK(report::detail::csv_escape("a,b") == "\"a,b\"");
    CHECK(report::detail::csv_escape("say \"hi\"") == "\"say \"\"hi\"\"\"");
    CHECK(report::detail::csv_escape("two\nlines") == "\"two\nlines\"");
}

TEST_CASE("structured report is valid JSON with the expected spine") {
    const auto bundle = report::analyze_dataset(demo_dataset());
    const auto text = report::render_report(bundle, report::Format::Structured);
    const auto doc = nlohmann::json::parse(text);

    CHECK(doc.at("schema") == "capstruct-report/1");
    CHECK(doc.at("settings").at("stars").at("strong") == 0.01);
    CHECK(doc.at("settings").at("pecking_strict") == true);
    REQUIRE(doc.at("firms").size() == 3);

    const auto& demo = doc.at("firms").at(0);
    CHECK(demo.at("firm_id") == "DEMO");
    REQUIRE(demo.at("years").size() == 12);
    CHECK(demo.at("years").at(0) == 2011);

    // missing derived cells surface as JSON nulls
    const auto& etfr = demo.at("derived").at("ETFR");
    REQUIRE(etfr.size() == 12);
    CHECK(etfr.at(0).is_null());
    CHECK(etfr.at(1).is_null());
    CHECK(etfr.at(2).get<double>() == Approx(2166.6666666666715).epsilon(1e-12));

    // hypotheses carry full-precision p-values
    bool saw_h12 = false;
    for (const auto& h : demo.at("hypotheses")) {
        if (h.at("id") == "H12") {
            saw_h12 = true;
            CHECK(h.at("p_value").get<double>() == Approx(1.66585087847701e-05).epsilon(1e-10));
            CHECK(h.at("stars") == "***");
        }
    }
    CHECK(saw_h12);

    CHECK(demo.at("pooled_fit").at("robust_flavor") == "HC1");
    CHECK(demo.at("pecking_order").at("years_followed") == 7);
    CHECK(demo.at("peak_mvf").at("peak_year") == 2020);
    CHECK(demo.at("peak_mvf").at("interior") == true);
    REQUIRE(demo.at("verdicts").size() == 6);
    CHECK(demo.at("screening").at("ratios").size() == 8);
    CHECK(demo.at("screening").at("quantitative").size() == 4);
    CHECK(demo.at("screening").at("qualitative").size() == 3);
    CHECK(demo.at("technical_indicators").at("rsi").at("regime") == "Neutral");
    CHECK(demo.at("rank_correlations").at("names").size() == 14);

    // the first-year peak has a null prior year
    const auto& pkf = doc.at("firms").at(2);
    CHECK(pkf.at("firm_id") == "PKF");
    CHECK(pkf.at("peak_mvf").at("prior_year").is_null());
    // no price series attached, so no technical indicators key
    CHECK_FALSE(pkf.contains("technical_indicators"));
}

TEST_CASE("rendering is deterministic across repeated runs") {
    const auto data = demo_dataset();
    const auto b1 = report::analyze_dataset(data);
    const auto b2 = report::analyze_dataset(data);
    for (auto fmt : {report::Format::Markdown, report::Format::Csv,
                     report::Format::Structured}) {
        CHECK(report::render_report(b1, fmt) == report::render_report(b2, fmt));
    }
}

TEST_CASE("engine config feeds the pecking mode and the star legend") {
    report::AnalysisOptions opt;
    opt.engine = config::parse_config("pecking.strict = false\nstars.strong = 0.005\n");

    const auto panel = ingest::parse_panel_csv(read_file(kFixtures + "/pecking_two.csv"));
    const auto a = report::analyze_firm(panel, nullptr, opt);
    REQUIRE(a.pecking.has_value());
    CHECK(a.pecking->years_followed == 3);  // strict ordering finds only 2

    report::ReportBundle bundle;
    bundle.firms.push_back(a);
    bundle.engine = opt.engine;
    const auto md = report::render_report(bundle, report::Format::Markdown);
    CHECK(md.find("*** p<0.005, ** p<0.05, * p<0.1") != std::string::npos);
    CHECK(md.find("allowing ties") != std::string::npos);
}

TEST_CASE("verdict cutoffs from the config change the classification") {
    report::AnalysisOptions opt;
    opt.engine = config::parse_config("verdict.followed = 0.0000001\nverdict.partial = 0.000001\n");
    const auto panel = ingest::parse_panel_csv(read_file(kFixtures + "/demo_bank.csv"));
    const auto a = report::analyze_firm(panel, nullptr, opt);
    for (const auto& v : a.verdicts) {
        if (v.theory == theorylab::Theory::NetOperatingIncome)
            CHECK(v.status == theorylab::Adherence::NotFollowed);
    }
}

TEST_CASE("section renderers reject the structured format") {
    const auto bundle = report::analyze_dataset(demo_dataset());
    CHECK_THROWS_AS(report::render_verdict_summary(bundle, report::Format::Structured),
                    report::UnsupportedFormat);
    CHECK_THROWS_AS(report::render_peak_table(bundle, report::Format::Structured),
                    report::UnsupportedFormat);
}

TEST_CASE("short price series degrade to notes instead of failures") {
    const auto panel = ingest::parse_panel_csv(read_file(kFixtures + "/demo_bank.csv"));
    ingest::PriceSeries tiny;
    tiny.firm_id = "DEMO";
    for (int i = 0; i < 5; ++i)
        tiny.points.push_back({"2022-01-0" + std::to_string(i + 1), 100.0 + i});
    report::AnalysisOptions opt;  // default window 200, period 14: both too long
    const auto a = report::analyze_firm(panel, &tiny, opt);
    CHECK(a.has_prices);
    CHECK(a.moving_average.empty());
    CHECK_FALSE(a.moving_average_note.empty());
    CHECK_FALSE(a.rsi.has_value());
    CHECK_FALSE(a.rsi_note.empty());

    report::ReportBundle bundle;
    bundle.firms.push_back(a);
    CHECK_NOTHROW(report::render_report(bundle, report::Format::Markdown));
    const auto doc = nlohmann::json::parse(
        report::render_report(bundle, report::Format::Structured));
    CHECK(doc.at("firms").at(0).at("technical_indicators").at("moving_average").is_null());
}
