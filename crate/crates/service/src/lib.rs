//! HTTP service and command-line front end for the conversational
//! modeling pipeline.

pub mod api;
pub mod app;
pub mod cli;
pub mod config;
pub mod store;

use std::sync::Arc;

use lpchat_gateway::{Gateway, Transcript};

pub use app::{router, AppState};
pub use cli::CliError;
pub use config::ServiceConfig;

/// State for `config`, with the backend it names and a transcript file in
/// the data directory. Fails when the data directory is unusable.
pub fn build_state(config: ServiceConfig) -> Result<Arc<AppState>, CliError> {
    store::Store::open(&config.data_dir)?;
    let path = config.data_dir.join("transcript.jsonl");
    let transcript = Transcript::file_backed(&path).map_err(|source| CliError::Io { path, source })?;
    let gateway = Gateway::from_config(&config.backend)?.with_transcript(transcript);
    Ok(AppState::new(config, gateway)?)
}

/// Binds `config.listen` and serves until Ctrl-C.
pub async fn serve(config: ServiceConfig) -> Result<(), CliError> {
    let listen = config.listen.clone();
    let state = build_state(config)?;
    let listener = tokio::net::TcpListener::bind(&listen).await.map_err(|source| CliError::Io {
        path: listen.clone().into(),
        source,
    })?;
    tracing::info!("listening on {listen}");
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
        .map_err(|source| CliError::Io {
            path: listen.into(),
            source,
        })
}
