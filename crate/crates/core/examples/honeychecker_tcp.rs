//! The honeychecker on its own: SET and CHECK over TCP.
//!
//! cargo run --example honeychecker_tcp

use std::sync::Arc;

use honeyq::honeychecker::{CheckerClient, CheckerServer, Honeychecker, IndexService};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::temp_dir().join(format!("honeyq-checker-{}", std::process::id()));
    let checker = Arc::new(Honeychecker::open(&dir)?);
    let server = CheckerServer::spawn("127.0.0.1:0", Arc::clone(&checker))?;
    let client = CheckerClient::new(server.local_addr().to_string());

    client.set("alex", 7)?;
    for i in [7, 3] {
        println!("CHECK alex {i} -> {:?}", client.check("alex", i)?);
    }
    println!("CHECK nobody 0 -> {:?}", client.check("nobody", 0)?);
    print!("{}", std::fs::read_to_string(dir.join("alarms.log"))?);
    server.shutdown();
    std::fs::remove_dir_all(dir)?;
    Ok(())
}
