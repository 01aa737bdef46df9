pub mod bench;
pub mod deploy;
pub mod fixtures;
pub mod mock_api;
pub mod oracle;
pub mod queries;
