use std::io::{BufRead, BufReader};
use std::net::TcpListener;
use std::process::{Child, Command, Stdio};

struct Running(Child, String);

impl Drop for Running {
    fn drop(&mut self) {
        let _ = self.0.kill();
        let _ = self.0.wait();
    }
}

fn start(bin: &str, args: &[&str]) -> Running {
    let mut child = Command::new(bin)
        .args(args)
        .stdout(Stdio::piped())
        .stderr(Stdio::null())
        .spawn()
        .unwrap();
    let mut line = String::new();
    BufReader::new(child.stdout.take().unwrap()).read_line(&mut line).unwrap();
    let url = line.trim().rsplit(' ').next().unwrap().to_string();
    assert!(url.starts_with("http://"), "unexpected banner {line:?}");
    Running(child, url)
}

fn free_port() -> u16 {
    TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port()
}

fn audit(args: &[&str]) -> (Option<i32>, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_audit")).args(args).output().unwrap();
    (out.status.code(), String::from_utf8(out.stdout).unwrap())
}

#[test]
fn audit_of_an_unreachable_target_exits_2() {
    let target = format!("http://127.0.0.1:{}/", free_port());
    let (code, table) = audit(&[&target, "--timeout", "2"]);
    assert_eq!(code, Some(2));
    assert!(table.contains("| cache"));
}

#[test]
fn mock_and_gateway_binaries_audit_as_expected() {
    let mock = start(env!("CARGO_BIN_EXE_mock-wps"), &["--port", "0"]);
    let wps = mock.1.replace("0.0.0.0", "127.0.0.1") + "/wps";
    let (code, json) = audit(&[&wps, "--style", "raw-wps", "--format", "json"]);
    assert_eq!(code, Some(0));
    assert!(json.contains("\"style\": \"raw-wps\""));

    let port = free_port();
    let base = format!("http://127.0.0.1:{port}");
    let _gateway = start(
        env!("CARGO_BIN_EXE_gateway"),
        &["--port", &port.to_string(), "--backend", &wps, "--base-uri", &base],
    );
    let (code, table) = audit(&[&format!("{base}/")]);
    assert_eq!(code, Some(0));
    assert!(table.contains("counts: yes=7 partial=0 no=0 error=0 not-probed=2"), "{table}");
}

#[test]
fn bad_arguments_are_rejected() {
    let status = Command::new(env!("CARGO_BIN_EXE_mock-wps"))
        .args(["--fault", "sometimes"])
        .stderr(Stdio::null())
        .status()
        .unwrap();
    assert!(!status.success());
    let status = Command::new(env!("CARGO_BIN_EXE_gateway"))
        .args(["--backend", "http://x/wps", "--base-uri", "relative/path", "--port", "0"])
        .stderr(Stdio::null())
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));
}
