// SPDX-License-Identifier: Apache-2.0

use super::*;
use crate::bits::BitVecLiteral;

const LISTING1: &str = include_str!("../../designs/listing1.v");
const LISTING1_RAW: &str = include_str!("../../designs/listing1_raw.v");
const LISTING2: &str = include_str!("../../designs/listing2.v");

fn errors(src: &str) -> Vec<Diagnostic> {
    parse_module(src).expect_err("expected a parse failure").0
}

fn first_error(src: &str) -> String {
    errors(src)[0].message.clone()
}

#[test]
fn listing1_shape() {
    let m = parse_module(LISTING1).unwrap();
    assert_eq!(m.name, "top");
    let ports: Vec<(&str, u32)> = m.ports.iter().map(|p| (p.name.as_str(), p.width())).collect();
    assert_eq!(ports, vec![("clock", 1), ("reset", 1), ("in", 8), ("out", 1)]);
    assert_eq!(m.registers(), vec![("counter".to_string(), 8), ("out".to_string(), 1)]);
    assert_eq!(m.processes.len(), 2);
    assert!(m.processes.iter().all(Process::is_clocked));
    assert_eq!(m.clock(), Some("clock"));
}

#[test]
fn empty_source_is_one_error_at_start() {
    let errs = errors("");
    assert_eq!(errs.len(), 1);
    assert_eq!(errs[0].pos, SourcePos::START);
    assert_eq!(errs[0].severity, Severity::Error);
}

#[test]
fn missing_endmodule_reports_end_of_input_at_final_position() {
    let src = LISTING1.replace("endmodule", "");
    let errs = errors(&src);
    assert_eq!(errs.len(), 1);
    assert!(errs[0].message.contains("unexpected end of input"), "{}", errs[0].message);
    // Position just past the last non-blank character of the buffer.
    let last_line = src.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()).last().unwrap();
    let expected = SourcePos::new(last_line.0 as u32 + 1, last_line.1.trim_end().len() as u32 + 1);
    assert_eq!(errs[0].pos, expected);
}

#[test]
fn round_trip_listings() {
    for src in [LISTING1, LISTING1_RAW, LISTING2] {
        let m = parse_module(src).unwrap();
        let text = pretty_print(&m);
        let again = parse_module(&text).unwrap_or_else(|e| panic!("{e}\n{text}"));
        assert!(m.same_structure(&again), "{text}");
    }
}

#[test]
fn listing2_keeps_combinational_process() {
    let m = parse_module(LISTING2).unwrap();
    assert_eq!(m.processes.len(), 2);
    assert!(!m.processes[0].is_clocked());
    assert!(m.processes[1].is_clocked());
}

#[test]
fn empty_process_list_prints_skeleton() {
    let m = parse_module("module empty(input wire a, output wire b); assign b = a; endmodule")
        .unwrap();
    let mut bare = m.clone();
    bare.assigns.clear();
    let text = pretty_print(&bare);
    assert!(text.starts_with("module empty ("));
    assert!(text.trim_end().ends_with("endmodule"));
    assert!(parse_module(&text).unwrap().same_structure(&bare));
}

#[test]
fn interface_checks() {
    let m = parse_module(LISTING1).unwrap();
    let full = PortSpec::new(vec![
        PortSpec::entry("clock", Direction::Input, 1),
        PortSpec::entry("reset", Direction::Input, 1),
        PortSpec::entry("in", Direction::Input, 8),
        PortSpec::entry("out", Direction::Output, 1),
    ])
    .unwrap();
    assert_eq!(validate_interface(&m, &full), Ok(()));

    let mut wide = full.clone();
    wide.ports[3].width = 2;
    let errs = validate_interface(&m, &wide).unwrap_err();
    assert_eq!(errs.iter().map(|e| e.to_string()).collect::<Vec<_>>(), vec!["out: width 1 ≠ 2"]);

    let mut no_reset = full.clone();
    no_reset.ports.remove(1);
    let errs = validate_interface(&m, &no_reset).unwrap_err();
    assert_eq!(errs.iter().map(|e| e.to_string()).collect::<Vec<_>>(), vec!["reset: unexpected port"]);

    let mut extra = full.clone();
    extra.ports.push(PortSpec::entry("en", Direction::Input, 1));
    extra.ports[2].direction = Direction::Output;
    let msgs: Vec<String> =
        validate_interface(&m, &extra).unwrap_err().iter().map(|e| e.to_string()).collect();
    assert_eq!(msgs, vec!["in: direction input ≠ output", "en: missing port"]);

    assert!(PortSpec::new(vec![
        PortSpec::entry("a", Direction::Input, 1),
        PortSpec::entry("a", Direction::Input, 1)
    ])
    .is_err());
}

#[test]
fn port_spec_json() {
    let spec = PortSpec::from_json(
        r#"{"ports":[{"name":"clock","direction":"input","width":1},{"name":"out","direction":"output","width":1}]}"#,
    )
    .unwrap();
    assert_eq!(spec.ports[1].direction, Direction::Output);
}

#[test]
fn unsupported_constructs_are_named() {
    let wrap = |body: &str| format!("module m(input wire clk, input wire [7:0] a, output reg [7:0] q);\n{body}\nendmodule");
    let cases = [
        ("generate endgenerate", "unsupported: generate"),
        ("initial q = 0;", "unsupported: initial"),
        ("function f; endfunction", "unsupported: function"),
        ("task t; endtask", "unsupported: task"),
        ("reg [7:0] mem [0:3];", "unsupported: memories"),
        ("always @(negedge clk) q <= a;", "unsupported: negedge"),
        ("always @(posedge clk) q <= 8'bxxxx0000;", "unsupported: x/z literal"),
        ("`define W 8", "unsupported: compiler directive"),
        ("always @(posedge clk) q <= a * 2;", "unsupported: operator `*`"),
    ];
    for (body, msg) in cases {
        assert_eq!(first_error(&wrap(body)), msg, "{body}");
    }
    assert_eq!(
        first_error("module m(inout wire a); endmodule"),
        "unsupported: inout"
    );
    assert_eq!(
        first_error("module m(input signed [3:0] a); endmodule"),
        "unsupported: signed"
    );
}

#[test]
fn multiple_clocks_rejected() {
    let src = "module m(input wire c1, input wire c2, output reg a, output reg b);\n\
               always @(posedge c1) a <= 1'b1;\n\
               always @(posedge c2) b <= 1'b1;\nendmodule";
    assert!(errors(src).iter().any(|d| d.message == "unsupported: multiple clocks"));
}

#[test]
fn semantic_errors() {
    let undeclared = "module m(input wire clk, output reg q);\nalways @(posedge clk) q <= nope;\nendmodule";
    let e = errors(undeclared);
    assert_eq!(e[0].message, "undeclared identifier `nope`");
    assert_eq!(e[0].pos, SourcePos::new(2, 28));

    let multi = "module m(input wire clk, input wire a, output reg q);\n\
                 always @(posedge clk) q <= a;\n\
                 always @(*) q = ~a;\nendmodule";
    assert!(errors(multi).iter().any(|d| d.message == "multiple drivers for `q`"));

    let nba_comb = "module m(input wire a, output reg q);\nalways @(*) q <= a;\nendmodule";
    assert_eq!(first_error(nba_comb), "non-blocking assignment in combinational process");

    let assign_reg = "module m(input wire a, output reg q);\nassign q = a;\nendmodule";
    assert_eq!(first_error(assign_reg), "continuous assignment to reg `q`");

    let label = "module m(input wire clk, input wire [1:0] a, output reg q);\n\
                 always @(posedge clk) case (a) a: q <= 1'b1; endcase\nendmodule";
    assert_eq!(first_error(label), "case label must be a constant");
}

#[test]
fn syntax_error_positions() {
    let src = "module m(input wire clk, output reg q);\nalways @(posedge clk) q <= 1'b1\nendmodule";
    let e = errors(src);
    assert_eq!(e.len(), 1);
    assert_eq!(e[0].message, "expected `;`, found `endmodule`");
    assert_eq!(e[0].pos, SourcePos::new(3, 1));
}

#[test]
fn diagnostics_render_with_file_prefix() {
    let e = parse_module("module").unwrap_err();
    assert_eq!(e.render("x.v"), "x.v:1:7: error: unexpected end of input, expected identifier");
}

#[test]
fn non_ansi_ports_and_parameters() {
    let src = "module m(clk, d, q);\n\
               parameter W = 4;\n\
               localparam [W-1:0] ONE = 1;\n\
               input clk;\ninput [W-1:0] d;\noutput [W-1:0] q;\nreg [W-1:0] q;\n\
               always @(posedge clk) q <= d + ONE;\nendmodule";
    let m = parse_module(src).unwrap();
    assert_eq!(m.ports.len(), 3);
    assert_eq!(m.ports[2].width(), 4);
    assert!(m.ports[2].is_reg);
    assert_eq!(m.params[1].value, BitVecLiteral::new(4, 1));
    let StmtKind::NonBlocking(_, rhs) = &m.processes[0].body.kind else { panic!() };
    let ExprKind::Binary(_, _, b) = &rhs.kind else { panic!() };
    assert_eq!(b.kind, ExprKind::Literal { lit: BitVecLiteral::new(4, 1), sized: true });
    let again = parse_module(&pretty_print(&m)).unwrap();
    assert!(m.same_structure(&again));
}

#[test]
fn explicit_sensitivity_list_is_combinational() {
    let src = "module m(input wire a, input wire b, output reg y);\nalways @(a or b) y = a & b;\nendmodule";
    let m = parse_module(src).unwrap();
    assert_eq!(m.processes[0].trigger, Trigger::Star);
}

#[test]
fn width_inference() {
    let src = "module m(input wire [7:0] a, input wire [3:0] b, output wire [15:0] y, output wire z);\n\
               assign y = {a, b, a[3:0]};\n\
               assign z = (a + b) > 8'd3 && ^b;\nendmodule";
    let m = parse_module(src).unwrap();
    assert_eq!(m.assigns[0].rhs.width, 16);
    let ExprKind::Binary(_, cmp, red) = &m.assigns[1].rhs.kind else { panic!() };
    assert_eq!(m.assigns[1].rhs.width, 1);
    assert_eq!(red.width, 1);
    let ExprKind::Binary(_, sum, _) = &cmp.kind else { panic!() };
    assert_eq!(sum.width, 8);
    let shift = parse_module(
        "module m(input wire [3:0] a, output wire [3:0] y);\nassign y = a << 32'd2;\nendmodule",
    )
    .unwrap();
    assert_eq!(shift.assigns[0].rhs.width, 4);
    let unsized_sum = parse_module(
        "module m(input wire [3:0] a, output wire [3:0] y);\nassign y = a - 1;\nendmodule",
    )
    .unwrap();
    assert_eq!(unsized_sum.assigns[0].rhs.width, 32);
}

#[test]
fn precedence_and_parentheses_round_trip() {
    let src = "module m(input wire [7:0] a, input wire [7:0] b, output wire [7:0] y);\n\
               assign y = (a - (b - 8'd1)) & ~(a | b) ^ (a == b ? a : {2{b[3:0]}}) + -(a >> 2);\nendmodule";
    let m = parse_module(src).unwrap();
    let again = parse_module(&pretty_print(&m)).unwrap();
    assert!(m.same_structure(&again), "{}", pretty_print(&m));
}
