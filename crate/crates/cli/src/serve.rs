use crowdwalk_service::{shutdown_signal, Server, ServiceConfig, ServiceError};

use crate::args::ServeArgs;
use crate::config::{pick, FileConfig};
use crate::CliError;

pub(crate) fn command(args: &ServeArgs, file: &FileConfig) -> Result<(), CliError> {
    let s = &file.service;
    let d = ServiceConfig::default();
    let config = ServiceConfig {
        bind: pick(args.bind, s.bind).unwrap_or(d.bind),
        store_path: pick(args.store.clone(), s.store.clone()).unwrap_or(d.store_path),
        threshold: pick(args.threshold, s.threshold).unwrap_or(d.threshold),
        page_size: pick(args.page_size, s.page_size).unwrap_or(d.page_size),
    };
    let to_cli = |e: ServiceError| match e {
        ServiceError::Config(m) => CliError::Usage(m),
        other => CliError::Runtime(other.to_string()),
    };
    crate::runtime()?.block_on(async {
        let server = Server::bind(&config).await.map_err(to_cli)?;
        // Scripts starting the server on port 0 read the address from here.
        println!("listening on http://{}", server.local_addr());
        server.run(shutdown_signal()).await.map_err(to_cli)
    })
}
