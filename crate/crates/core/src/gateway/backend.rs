use std::time::Duration;

use async_trait::async_trait;
use thiserror::Error;

use crate::wps::{
    kvp, xml, ExceptionReport, ExecuteOutcome, ExecuteRequest, OperationRequest, ProcessDescription,
    ServiceCapabilities,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BackendError {
    #[error("backend unreachable: {0}")]
    Network(String),
    #[error("backend answered with an exception report")]
    Exception(ExceptionReport),
    #[error("backend sent an unreadable answer: {0}")]
    Protocol(String),
}

/// The WPS operations the gateway needs from its backend.
#[async_trait]
pub trait WpsBackend: Send + Sync + 'static {
    async fn capabilities(&self) -> Result<ServiceCapabilities, BackendError>;
    async fn describe(&self, identifiers: &[String]) -> Result<Vec<ProcessDescription>, BackendError>;
    async fn execute(&self, request: &ExecuteRequest) -> Result<ExecuteOutcome, BackendError>;
}

/// A WPS reached over HTTP. Discovery uses the KVP binding, Execute the
/// XML POST binding.
pub struct HttpBackend {
    endpoint: String,
    client: reqwest::Client,
}

impl HttpBackend {
    pub fn new(endpoint: impl Into<String>, timeout: Duration) -> Self {
        HttpBackend {
            endpoint: endpoint.into(),
            client: reqwest::Client::builder()
                .timeout(timeout)
                .build()
                .expect("default HTTP client builds"),
        }
    }

    pub fn endpoint(&self) -> &str {
        &self.endpoint
    }

    async fn get_kvp(&self, request: &OperationRequest) -> Result<Vec<u8>, BackendError> {
        let query = kvp::encode_kvp(request).map_err(|e| BackendError::Protocol(e.to_string()))?;
        let sep = if self.endpoint.contains('?') { '&' } else { '?' };
        let url = format!("{}{sep}{query}", self.endpoint);
        let resp = self
            .client
            .get(url)
            .send()
            .await
            .map_err(|e| BackendError::Network(e.to_string()))?;
        read_body(resp).await
    }
}

async fn read_body(resp: reqwest::Response) -> Result<Vec<u8>, BackendError> {
    let status = resp.status();
    let body = resp
        .bytes()
        .await
        .map_err(|e| BackendError::Network(e.to_string()))?
        .to_vec();
    if xml::root_name(&body).as_deref() == Some("ExceptionReport") {
        let report =
            xml::parse_exception_report(&body).map_err(|e| BackendError::Protocol(e.to_string()))?;
        return Err(BackendError::Exception(report));
    }
    if !status.is_success() {
        return Err(BackendError::Protocol(format!("status {status}")));
    }
    Ok(body)
}

#[async_trait]
impl WpsBackend for HttpBackend {
    async fn capabilities(&self) -> Result<ServiceCapabilities, BackendError> {
        let body = self
            .get_kvp(&OperationRequest::GetCapabilities {
                service: "WPS".into(),
            })
            .await?;
        xml::parse_capabilities(&body).map_err(|e| BackendError::Protocol(e.to_string()))
    }

    async fn describe(&self, identifiers: &[String]) -> Result<Vec<ProcessDescription>, BackendError> {
        let body = self
            .get_kvp(&OperationRequest::DescribeProcess {
                identifiers: identifiers.to_vec(),
            })
            .await?;
        xml::parse_process_descriptions(&body).map_err(|e| BackendError::Protocol(e.to_string()))
    }

    async fn execute(&self, request: &ExecuteRequest) -> Result<ExecuteOutcome, BackendError> {
        let doc = xml::encode_xml(&OperationRequest::Execute(request.clone()))
            .map_err(|e| BackendError::Protocol(e.to_string()))?;
        let resp = self
            .client
            .post(&self.endpoint)
            .header(http::header::CONTENT_TYPE, "text/xml; charset=UTF-8")
            .body(doc)
            .send()
            .await
            .map_err(|e| BackendError::Network(e.to_string()))?;
        match read_body(resp).await {
            Ok(body) => {
                xml::parse_execute_response(&body).map_err(|e| BackendError::Protocol(e.to_string()))
            }
            Err(BackendError::Exception(report)) => Ok(ExecuteOutcome::Exception(report)),
            Err(e) => Err(e),
        }
    }
}
